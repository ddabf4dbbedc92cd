//! One function per subcommand. Each reads only the flags and document
//! fields it declares and rejects any other that is set.

use std::f64::consts::TAU;

use garland_core::atlas::{atlas_sweep, AtlasDocument, RegionId, Window};
use garland_core::equilibria::{assemble_garland, find_equilibria_with, EquilibriumKind, Garland, SolverOptions};
use garland_core::flow::{divergence, hamiltonian, integrate, DEFAULT_VALIDITY_RADIUS};
use garland_core::maps::{
    embedding_residual, find_periodic_orbits, symmetry_pairing, EmbeddingResidual, MapGarland, OrbitKind, OrbitSearch,
    PlanarMap, SeedPolicy, TwistKickMap,
};
use garland_core::normal_form::{embed_rotated, normalize, Embedding};
use garland_core::{FlowModel, FlowParams, NormalFormResult, PolarState, ResonanceSpec, TruncatedSeries};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::input::Document;
use crate::output::{f, Artifacts, Csv};
use crate::svg::Plot;
use crate::{Cli, CliError, Command, Format};

const DEFAULT_RESOLUTION: usize = 64;
const DEFAULT_ATLAS_HALF_WIDTH: f64 = 0.02;
const MAX_RESOLUTION: usize = 512;
const DEFAULT_T_END: f64 = 100.0;
const DEFAULT_DT: f64 = 0.5;
const DEFAULT_ODE_TOL: f64 = 1e-10;
const DEFAULT_TRAJECTORIES: usize = 8;

struct Contract {
    flags: &'static [&'static str],
    fields: &'static [&'static str],
    formats: &'static [Format],
    needs_input: bool,
}

fn contract(cmd: Command) -> Contract {
    use Format::*;
    match cmd {
        Command::Normalize => Contract {
            flags: &["p", "q"],
            fields: &["p", "q", "symmetric", "map"],
            formats: &[Json, Csv],
            needs_input: true,
        },
        Command::Embed => Contract {
            flags: &["p", "q"],
            fields: &["p", "q", "symmetric", "map"],
            formats: &[Json, Csv],
            needs_input: true,
        },
        Command::Garland => Contract {
            flags: &["q", "model", "tol-newton"],
            fields: &["flow"],
            formats: &[Json, Csv, Svg],
            needs_input: true,
        },
        Command::Atlas => Contract {
            flags: &["q", "model", "window", "resolution"],
            fields: &["flow", "window", "resolution"],
            formats: &[Json, Csv, Svg],
            needs_input: false,
        },
        Command::Orbit => Contract {
            flags: &["p", "q", "period", "radius", "tol-newton"],
            fields: &["p", "q", "symmetric", "map", "twist_kick", "period", "radius"],
            formats: &[Json, Csv, Svg],
            needs_input: true,
        },
        Command::Portrait => Contract {
            flags: &["q", "model", "seed", "tol-ode"],
            fields: &["flow", "initial", "n_random", "t_end", "dt"],
            formats: &[Json, Csv, Svg],
            needs_input: true,
        },
    }
}

fn set_flags(cli: &Cli) -> Vec<&'static str> {
    let mut v = Vec::new();
    let mut note = |set: bool, name| {
        if set {
            v.push(name)
        }
    };
    note(cli.seed.is_some(), "seed");
    note(cli.window.is_some(), "window");
    note(cli.resolution.is_some(), "resolution");
    note(cli.q.is_some(), "q");
    note(cli.p.is_some(), "p");
    note(cli.model.is_some(), "model");
    note(cli.tol_newton.is_some(), "tol-newton");
    note(cli.tol_ode.is_some(), "tol-ode");
    note(cli.radius.is_some(), "radius");
    note(cli.period.is_some(), "period");
    v
}

fn name(cmd: Command) -> &'static str {
    match cmd {
        Command::Normalize => "normalize",
        Command::Embed => "embed",
        Command::Garland => "garland",
        Command::Atlas => "atlas",
        Command::Orbit => "orbit",
        Command::Portrait => "portrait",
    }
}

pub fn dispatch(cli: &Cli, doc: &Document, has_input: bool, out: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let c = contract(cli.command);
    let cmd = name(cli.command);
    if c.needs_input && !has_input {
        return Err(CliError::Usage(format!("`{cmd}` requires --input")));
    }
    if let Some(flag) = set_flags(cli).into_iter().find(|f| !c.flags.contains(f)) {
        return Err(CliError::Usage(format!("--{flag} is not used by `{cmd}`")));
    }
    if let Some(field) = doc.present_fields().into_iter().find(|f| !c.fields.contains(f)) {
        return Err(CliError::Schema(format!("at `{field}`: field is not used by `{cmd}`")));
    }
    if !c.formats.contains(&cli.format) {
        return Err(CliError::Usage(format!("`{cmd}` has no {:?} output", cli.format)));
    }
    match cli.command {
        Command::Normalize => run_normalize(cli, doc, out),
        Command::Embed => run_embed(cli, doc, out),
        Command::Garland => run_garland(cli, doc, out),
        Command::Atlas => run_atlas(cli, doc, out),
        Command::Orbit => run_orbit(cli, doc, out),
        Command::Portrait => run_portrait(cli, doc, out),
    }
}

fn resonance(cli: &Cli, doc: &Document) -> Result<ResonanceSpec, CliError> {
    let q = cli
        .q
        .or(doc.q)
        .ok_or_else(|| CliError::Usage("q is required (document field `q` or --q)".into()))?;
    let p = cli.p.or(doc.p).unwrap_or(1);
    Ok(ResonanceSpec::new(p, q, doc.symmetric.unwrap_or(true))?)
}

fn required_map(doc: &Document) -> Result<&TruncatedSeries, CliError> {
    doc.map
        .as_ref()
        .ok_or_else(|| CliError::Schema("at `map`: missing field".into()))
}

fn flow_params(cli: &Cli, doc: &Document) -> Result<FlowParams, CliError> {
    let mut p = doc
        .flow
        .clone()
        .ok_or_else(|| CliError::Schema("at `flow`: missing field".into()))?;
    if let Some(q) = cli.q {
        p.q = q;
    }
    if let Some(m) = cli.model {
        p.model = m.into();
    }
    Ok(p.validated()?)
}

fn series_csv(rows: &mut Csv, label: &str, s: &TruncatedSeries) {
    for (mono, c) in s.terms() {
        rows.row(&[label.into(), f(mono.m), f(mono.k), f(c.re), f(c.im)]);
    }
}

fn run_normalize(cli: &Cli, doc: &Document, out: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let spec = resonance(cli, doc)?;
    let nf = normalize(required_map(doc)?, &spec)?;
    match cli.format {
        Format::Csv => {
            let mut rows = Csv::new(&["series", "m", "k", "re", "im"]);
            series_csv(&mut rows, "normalized_map", &nf.normalized_map);
            series_csv(&mut rows, "transform", &nf.transform);
            out.write("normal_form.csv", &rows.into_bytes())?;
        }
        _ => out.write_json("normal_form.json", &nf)?,
    }
    reject_degenerate(&nf)?;
    Ok(degeneracy_notes(&nf))
}

/// The artifact is still written so the offending coefficients can be read.
fn reject_degenerate(nf: &NormalFormResult) -> Result<(), CliError> {
    let d = nf.degeneracy_flags;
    if d.g1_degenerate || d.leading_nonidentical_degenerate {
        return Err(garland_core::Error::Domain(format!("degenerate normal form: {}", degeneracy_notes(nf).join("; "))).into());
    }
    Ok(())
}

fn degeneracy_notes(nf: &NormalFormResult) -> Vec<String> {
    let mut notes = Vec::new();
    let d = nf.degeneracy_flags;
    if d.g1_degenerate {
        notes.push("leading twist coefficient g1 is numerically zero".into());
    }
    if d.leading_nonidentical_degenerate {
        notes.push("leading non-identical resonance is numerically zero".into());
    }
    if d.non_conservative {
        notes.push("identical resonances carry a radial part; the map is not area-preserving".into());
    }
    notes
}

#[derive(Serialize)]
struct EmbedOutput<'a> {
    spec: &'a ResonanceSpec,
    embedding: &'a Embedding,
    residual: &'a EmbeddingResidual,
}

fn run_embed(cli: &Cli, doc: &Document, out: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let spec = resonance(cli, doc)?;
    let map = required_map(doc)?;
    let nf = normalize(map, &spec)?;
    let embedding = embed_rotated(&nf, &spec)?;
    let residual = embedding_residual(&nf.normalized_map, &spec)?;
    match cli.format {
        Format::Csv => {
            let mut rows = Csv::new(&["radius", "residual", "residual_q", "residual_leading"]);
            for (i, r) in residual.radii.iter().enumerate() {
                rows.row(&[
                    f(r),
                    f(residual.residuals[i]),
                    f(residual.residuals_q[i]),
                    f(residual.residuals_leading[i]),
                ]);
            }
            out.write("embedding_residual.csv", &rows.into_bytes())?;
        }
        _ => out.write_json(
            "embedding.json",
            &EmbedOutput {
                spec: &spec,
                embedding: &embedding,
                residual: &residual,
            },
        )?,
    }
    reject_degenerate(&nf)?;
    let mut notes = degeneracy_notes(&nf);
    if let Some(order) = residual.order {
        notes.push(format!("fitted residual order {order:.3}"));
    }
    Ok(notes)
}

fn kind_str(k: EquilibriumKind) -> &'static str {
    match k {
        EquilibriumKind::Saddle => "saddle",
        EquilibriumKind::Center => "center",
        EquilibriumKind::StableFocus => "stable_focus",
        EquilibriumKind::UnstableFocus => "unstable_focus",
        EquilibriumKind::Degenerate => "degenerate",
    }
}

fn kind_color(k: EquilibriumKind) -> &'static str {
    match k {
        EquilibriumKind::Saddle => "#c0392b",
        EquilibriumKind::Center => "#2471a3",
        EquilibriumKind::StableFocus => "#1e8449",
        EquilibriumKind::UnstableFocus => "#d68910",
        EquilibriumKind::Degenerate => "#7f8c8d",
    }
}

#[derive(Serialize)]
struct GarlandOutput<'a> {
    params: &'a FlowParams,
    #[serde(flatten)]
    garland: &'a Garland,
}

fn solve_garland(cli: &Cli, p: &FlowParams) -> Result<Garland, CliError> {
    let mut opts = SolverOptions::default();
    if let Some(t) = cli.tol_newton {
        opts.newton_tol = t;
    }
    let eqs = find_equilibria_with(p, &opts)?;
    Ok(assemble_garland(&eqs, p))
}

fn run_garland(cli: &Cli, doc: &Document, out: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let p = flow_params(cli, doc)?;
    let g = solve_garland(cli, &p)?;
    match cli.format {
        Format::Json => out.write_json("garland.json", &GarlandOutput { params: &p, garland: &g })?,
        Format::Csv => {
            let mut rows = Csv::new(&[
                "index", "r", "psi", "x", "y", "kind", "symmetric", "reversible", "divergence", "eig1_re", "eig1_im",
                "eig2_re", "eig2_im",
            ]);
            for (i, e) in g.equilibria.iter().enumerate() {
                rows.row(&[
                    f(i),
                    f(e.state.r),
                    f(e.state.psi),
                    f(e.z.re),
                    f(e.z.im),
                    kind_str(e.kind).into(),
                    f(e.symmetry == garland_core::equilibria::SymmetryClass::CentrallySymmetricAxis),
                    f(e.reversible),
                    f(e.divergence),
                    f(e.eigenvalues[0].re),
                    f(e.eigenvalues[0].im),
                    f(e.eigenvalues[1].re),
                    f(e.eigenvalues[1].im),
                ]);
            }
            out.write("equilibria.csv", &rows.into_bytes())?;
        }
        Format::Svg => {
            let mut plot = Plot::plane(&format!("garland {:?}", g.label), g.equilibria.iter().map(|e| (e.z.re, e.z.im)));
            plot.marker(0.0, 0.0, "black", false);
            for e in &g.equilibria {
                plot.marker(e.z.re, e.z.im, kind_color(e.kind), e.kind == EquilibriumKind::Saddle);
                plot.legend(kind_str(e.kind), kind_color(e.kind));
            }
            out.write("garland.svg", plot.finish().as_bytes())?;
        }
    }
    let mut notes = g.diagnostics.clone();
    notes.insert(0, format!("{} equilibria, label {:?}", g.equilibria.len(), g.label));
    Ok(notes)
}

fn region_color(r: RegionId) -> &'static str {
    match r {
        RegionId::I => "#f4f6f7",
        RegionId::II => "#aed6f1",
        RegionId::III => "#f9e79f",
        RegionId::IV => "#abebc6",
    }
}

fn run_atlas(cli: &Cli, doc: &Document, out: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let params = match &doc.flow {
        Some(_) => flow_params(cli, doc)?,
        None => {
            let q = cli.q.unwrap_or(3);
            let base = FlowParams::sym_break(q, -0.01, 0.0, vec![1.0], 1.0)?;
            match cli.model.map(FlowModel::from) {
                None | Some(FlowModel::SymBreakConservative) => base,
                Some(FlowModel::ReversibleNonCons) => {
                    return Err(CliError::Usage(
                        "a reversible atlas needs A and B; give them in the document's `flow`".into(),
                    ))
                }
                Some(m) => FlowParams { model: m, ..base }.validated()?,
            }
        }
    };
    let window = cli
        .window
        .or(doc.window)
        .unwrap_or_else(|| Window::square(DEFAULT_ATLAS_HALF_WIDTH));
    let resolution = cli.resolution.or(doc.resolution).unwrap_or(DEFAULT_RESOLUTION);
    if !(2..=MAX_RESOLUTION).contains(&resolution) {
        return Err(CliError::Usage(format!("resolution must lie in 2..={MAX_RESOLUTION}, got {resolution}")));
    }
    let atlas = atlas_sweep(window, resolution, &params)?;
    match cli.format {
        Format::Json => out.write_json("atlas.json", &atlas)?,
        Format::Csv => {
            let mut grid = Csv::new(&["mu1", "mu2", "region", "n_saddle", "n_center", "n_focus"]);
            for g in &atlas.grid {
                grid.row(&[
                    f(g.mu1),
                    f(g.mu2),
                    g.region.as_str().into(),
                    f(g.census.saddle),
                    f(g.census.center),
                    f(g.census.focus()),
                ]);
            }
            out.write("atlas.csv", &grid.into_bytes())?;
            let mut curves = Csv::new(&["curve", "branch", "mu1", "mu2", "analytic"]);
            for c in &atlas.curves {
                for &(m1, m2) in &c.samples {
                    curves.row(&[format!("{:?}", c.name), f(c.branch), f(m1), f(m2), f(c.analytic)]);
                }
            }
            out.write("curves.csv", &curves.into_bytes())?;
        }
        Format::Svg => out.write("atlas.svg", atlas_svg(&atlas).as_bytes())?,
    }
    let disagreements = atlas.grid.iter().filter(|g| g.disagreement && !g.boundary).count();
    let mut notes = vec![format!(
        "{} grid points, regions {:?}",
        atlas.grid.len(),
        atlas.regions().iter().map(|r| r.as_str()).collect::<Vec<_>>()
    )];
    if disagreements > 0 {
        notes.push(format!("{disagreements} off-curve points where census and position disagree"));
    }
    Ok(notes)
}

fn atlas_svg(atlas: &AtlasDocument) -> String {
    let w = atlas.window;
    let mut plot = Plot::new("region atlas", (w.mu1_min, w.mu1_max), (w.mu2_min, w.mu2_max), "mu1", "mu2");
    let n = atlas.resolution;
    let h1 = 0.5 * (w.mu1_max - w.mu1_min) / (n - 1) as f64;
    let h2 = 0.5 * (w.mu2_max - w.mu2_min) / (n - 1) as f64;
    for g in &atlas.grid {
        let x0 = (g.mu1 - h1).max(w.mu1_min);
        let x1 = (g.mu1 + h1).min(w.mu1_max);
        let y0 = (g.mu2 - h2).max(w.mu2_min);
        let y1 = (g.mu2 + h2).min(w.mu2_max);
        plot.cell(x0, x1, y0, y1, region_color(g.region));
    }
    for r in atlas.regions() {
        plot.legend(&format!("region {}", r.as_str()), region_color(r));
    }
    for c in &atlas.curves {
        plot.polyline(&c.samples, if c.analytic { "black" } else { "#8e44ad" });
    }
    plot.finish()
}

fn orbit_kind_str(k: OrbitKind) -> String {
    format!("{k:?}")
}

#[derive(Serialize)]
struct OrbitOutput<'a> {
    spec: &'a ResonanceSpec,
    period: u32,
    search: &'a OrbitSearch,
    garland: &'a MapGarland,
}

fn run_orbit(cli: &Cli, doc: &Document, out: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let spec = resonance(cli, doc)?;
    let period = cli.period.or(doc.period).unwrap_or(spec.q);
    let policy = SeedPolicy {
        radius: cli.radius.or(doc.radius),
        newton_tol: cli.tol_newton.unwrap_or(garland_core::maps::NEWTON_TOL),
        ..SeedPolicy::default()
    };
    let (map, symmetric): (Box<dyn PlanarMap>, bool) = match (&doc.map, &doc.twist_kick) {
        (Some(s), None) => (Box::new(s.clone()), s.is_centrally_symmetric()),
        (None, Some(t)) => {
            if (t.p, t.q) != (spec.p, spec.q) {
                return Err(CliError::Schema(format!(
                    "at `twist_kick`: resonance {}:{} differs from p:q = {}:{}",
                    t.p, t.q, spec.p, spec.q
                )));
            }
            (Box::new(TwistKickMap::new(t.p, t.q, t.mu, t.twist.clone(), t.alpha)?), true)
        }
        (Some(_), Some(_)) => return Err(CliError::Schema("at `twist_kick`: give either `map` or `twist_kick`".into())),
        (None, None) => return Err(CliError::Schema("at `map`: missing field (or `twist_kick`)".into())),
    };
    let search = find_periodic_orbits(map.as_ref(), &spec, period, &policy)?;
    let garland = symmetry_pairing(&search.orbits, symmetric);
    match cli.format {
        Format::Json => out.write_json(
            "orbits.json",
            &OrbitOutput {
                spec: &spec,
                period,
                search: &search,
                garland: &garland,
            },
        )?,
        Format::Csv => {
            let mut rows = Csv::new(&["orbit", "point", "x", "y", "kind", "trace", "det"]);
            for (i, o) in search.orbits.iter().enumerate() {
                for (j, z) in o.points.iter().enumerate() {
                    rows.row(&[
                        f(i),
                        f(j),
                        f(z.re),
                        f(z.im),
                        orbit_kind_str(o.kind),
                        f(o.trace),
                        f(o.jacobian_det),
                    ]);
                }
            }
            out.write("orbits.csv", &rows.into_bytes())?;
        }
        Format::Svg => {
            let pts = search.orbits.iter().flat_map(|o| o.points.iter().map(|z| (z.re, z.im)));
            let mut plot = Plot::plane(&format!("period-{period} orbits, {:?}", garland.label), pts);
            plot.marker(0.0, 0.0, "black", false);
            for o in &search.orbits {
                let color = match o.kind {
                    OrbitKind::SaddleMap | OrbitKind::NonConsSaddle => "#c0392b",
                    OrbitKind::Elliptic => "#2471a3",
                    OrbitKind::SinkMap => "#1e8449",
                    OrbitKind::SourceMap => "#d68910",
                    OrbitKind::Degenerate => "#7f8c8d",
                };
                plot.legend(&orbit_kind_str(o.kind), color);
                for z in &o.points {
                    plot.marker(z.re, z.im, color, matches!(o.kind, OrbitKind::SaddleMap | OrbitKind::NonConsSaddle));
                }
            }
            out.write("orbits.svg", plot.finish().as_bytes())?;
        }
    }
    let mut notes = search.diagnostics.clone();
    notes.extend(garland.diagnostics.iter().cloned());
    notes.insert(0, format!("{} orbits of period {period}, label {:?}", search.orbits.len(), garland.label));
    Ok(notes)
}

#[derive(Serialize)]
struct Sample {
    t: f64,
    x: f64,
    y: f64,
    r: f64,
    psi: f64,
    h: Option<f64>,
    div: f64,
}

#[derive(Serialize)]
struct TrajectoryOut {
    #[serde(with = "garland_core::json::complex")]
    initial: Complex64,
    escaped: bool,
    stalled: bool,
    samples: Vec<Sample>,
}

#[derive(Serialize)]
struct PortraitOutput<'a> {
    params: &'a FlowParams,
    seed: u64,
    t_end: f64,
    dt: f64,
    tol_ode: f64,
    trajectories: &'a [TrajectoryOut],
    garland: Option<&'a Garland>,
}

fn initial_points(doc: &Document, p: &FlowParams, seed: u64) -> Result<Vec<Complex64>, CliError> {
    if let Some(v) = &doc.initial {
        if doc.n_random.is_some() {
            return Err(CliError::Schema("at `n_random`: conflicts with `initial`".into()));
        }
        if v.is_empty() {
            return Err(CliError::Schema("at `initial`: empty list".into()));
        }
        return Ok(v.clone());
    }
    let n = doc.n_random.unwrap_or(DEFAULT_TRAJECTORIES);
    if n == 0 {
        return Err(CliError::Schema("at `n_random`: must be positive".into()));
    }
    // disc reaching past the garland radius sqrt(|mu1 / l1|)
    let garland = (p.mu1 / p.l1()).abs().sqrt();
    let radius = if garland > 0.0 && garland.is_finite() {
        (2.0 * garland).min(p.validity_radius)
    } else {
        0.5 * p.validity_radius.min(DEFAULT_VALIDITY_RADIUS)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            Complex64::from_polar(r, rng.gen_range(0.0..TAU))
        })
        .collect())
}

fn run_portrait(cli: &Cli, doc: &Document, out: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let p = flow_params(cli, doc)?;
    let seed = cli.seed.unwrap_or(0);
    let t_end = doc.t_end.unwrap_or(DEFAULT_T_END);
    let dt = doc.dt.unwrap_or(DEFAULT_DT);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CliError::Schema(format!("at `dt`: must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(CliError::Schema(format!("at `t_end`: must be non-negative, got {t_end}")));
    }
    let tol = cli.tol_ode.unwrap_or(DEFAULT_ODE_TOL);
    let starts = initial_points(doc, &p, seed)?;
    let conservative = hamiltonian(&p, PolarState::from_z(Complex64::default())).is_ok();
    let trajectories: Vec<TrajectoryOut> = starts
        .par_iter()
        .map(|&z0| {
            let traj = integrate(&p, z0, t_end, tol)?;
            let samples = traj
                .resample(dt)
                .into_iter()
                .map(|(t, z)| {
                    let s = PolarState::from_z(z);
                    Sample {
                        t,
                        x: z.re,
                        y: z.im,
                        r: s.r,
                        psi: s.psi,
                        h: conservative.then(|| hamiltonian(&p, s).ok()).flatten(),
                        div: divergence(&p, z),
                    }
                })
                .collect();
            Ok(TrajectoryOut {
                initial: z0,
                escaped: traj.escaped,
                stalled: traj.stalled,
                samples,
            })
        })
        .collect::<Result<_, garland_core::Error>>()?;
    let garland = match find_equilibria_with(&p, &SolverOptions::default()) {
        Ok(eqs) => Some(assemble_garland(&eqs, &p)),
        Err(garland_core::Error::Solver(_)) => None,
        Err(e) => return Err(e.into()),
    };
    match cli.format {
        Format::Json => out.write_json(
            "portrait.json",
            &PortraitOutput {
                params: &p,
                seed,
                t_end,
                dt,
                tol_ode: tol,
                trajectories: &trajectories,
                garland: garland.as_ref(),
            },
        )?,
        Format::Csv => {
            let mut rows = Csv::new(&["traj", "t", "x", "y", "r", "psi", "H", "div"]);
            for (i, tr) in trajectories.iter().enumerate() {
                for s in &tr.samples {
                    rows.row(&[
                        f(i),
                        f(s.t),
                        f(s.x),
                        f(s.y),
                        f(s.r),
                        f(s.psi),
                        s.h.map(f).unwrap_or_default(),
                        f(s.div),
                    ]);
                }
            }
            out.write("portrait.csv", &rows.into_bytes())?;
        }
        Format::Svg => {
            let pts = trajectories.iter().flat_map(|t| t.samples.iter().map(|s| (s.x, s.y)));
            let mut plot = Plot::plane("phase portrait", pts);
            for tr in &trajectories {
                let line: Vec<(f64, f64)> = tr.samples.iter().map(|s| (s.x, s.y)).collect();
                plot.polyline(&line, "#566573");
            }
            if let Some(g) = &garland {
                for e in &g.equilibria {
                    plot.marker(e.z.re, e.z.im, kind_color(e.kind), e.kind == EquilibriumKind::Saddle);
                    plot.legend(kind_str(e.kind), kind_color(e.kind));
                }
            }
            out.write("portrait.svg", plot.finish().as_bytes())?;
        }
    }
    let escaped = trajectories.iter().filter(|t| t.escaped).count();
    let mut notes = vec![format!("{} trajectories to t = {t_end}", trajectories.len())];
    if escaped > 0 {
        notes.push(format!("{escaped} trajectories left the validity radius"));
    }
    Ok(notes)
}
