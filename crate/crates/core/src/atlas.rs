//! Two-parameter `(mu1, mu2)` atlases of the symmetry-breaking models.
//!
//! A region id is decided by the equilibrium census at the point; the
//! position relative to the leading-order curves is only a cross-check.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{
    assemble_garland, find_equilibria, pitchfork_scan, Equilibrium, EquilibriumKind, GarlandLabel, ParamPath,
    SweepParameter, SymmetryClass,
};
use crate::error::{Error, Result};
use crate::flow::{hamiltonian, FlowModel, FlowParams};
use crate::linalg::linspace;

/// Relative half-width of the tube around `L_pf` in which points are
/// flagged as boundary points.
pub const BOUNDARY_TUBE: f64 = 0.05;
pub const MAX_RESOLUTION: usize = 512;
/// Relative saddle-level gap below which a grid cell joins the heuristic
/// heteroclinic band.
pub const HETEROCLINIC_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionId {
    I,
    II,
    III,
    IV,
}

impl RegionId {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionId::I => "I",
            RegionId::II => "II",
            RegionId::III => "III",
            RegionId::IV => "IV",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub saddle: usize,
    pub center: usize,
    pub stable_focus: usize,
    pub unstable_focus: usize,
    pub degenerate: usize,
    pub symmetric: usize,
    pub non_symmetric: usize,
    pub non_symmetric_saddle: usize,
    /// Non-symmetric centers and foci.
    pub non_symmetric_center: usize,
}

impl Census {
    pub fn of(eqs: &[Equilibrium]) -> Self {
        let mut c = Census::default();
        for e in eqs {
            match e.kind {
                EquilibriumKind::Saddle => c.saddle += 1,
                EquilibriumKind::Center => c.center += 1,
                EquilibriumKind::StableFocus => c.stable_focus += 1,
                EquilibriumKind::UnstableFocus => c.unstable_focus += 1,
                EquilibriumKind::Degenerate => c.degenerate += 1,
            }
            match e.symmetry {
                SymmetryClass::CentrallySymmetricAxis => c.symmetric += 1,
                SymmetryClass::NonSymmetric => {
                    c.non_symmetric += 1;
                    match e.kind {
                        EquilibriumKind::Saddle => c.non_symmetric_saddle += 1,
                        EquilibriumKind::Degenerate => {}
                        _ => c.non_symmetric_center += 1,
                    }
                }
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.symmetric + self.non_symmetric
    }

    pub fn focus(&self) -> usize {
        self.stable_focus + self.unstable_focus
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasRegion {
    pub id: RegionId,
    /// Region implied by the position relative to `L_pq` and `L_pf`.
    pub position_id: RegionId,
    pub sample_params: FlowParams,
    pub garland_label: GarlandLabel,
    pub census: Census,
    /// The census did not fit any region and the position was used.
    pub census_mismatch: bool,
    /// Census and position disagree.
    pub disagreement: bool,
    /// The point lies in the tube around a bifurcation curve.
    pub boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum CurveName {
    L_pf,
    L_pq,
    L_pf_reversible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCurve {
    pub name: CurveName,
    /// Sign of the `mu2` branch; 0 for `L_pq`.
    pub branch: i8,
    pub samples: Vec<(f64, f64)>,
    pub analytic: bool,
    pub notes: Vec<String>,
}

fn atlas_params(params: &FlowParams) -> Result<()> {
    params.validate()?;
    if params.model == FlowModel::Symmetric {
        return Err(Error::Config(
            "atlases need a symmetry-breaking model (SymBreakConservative or ReversibleNonCons)".into(),
        ));
    }
    if params.l1() == 0.0 || params.alpha == 0.0 {
        return Err(Error::Domain("nondegeneracy requires l1 != 0 and alpha != 0".into()));
    }
    Ok(())
}

/// Leading-order `|mu2|` on `L_pf`, `2 |alpha| (-mu1/l1)^{q/2}`; `None` when
/// `mu1 l1 >= 0`.
pub fn lpf_magnitude(params: &FlowParams, mu1: f64) -> Option<f64> {
    let x = -mu1 / params.l1();
    (x > 0.0).then(|| 2.0 * params.alpha.abs() * x.powf(0.5 * params.q as f64))
}

/// Both leading-order branches `mu2 = +-2 alpha (-mu1/l1)^{q/2}`; grid points
/// with `mu1 l1 >= 0` are skipped with a note.
pub fn curve_lpf(params: &FlowParams, mu1_grid: &[f64]) -> [BifurcationCurve; 2] {
    let x = |mu1: f64| -mu1 / params.l1();
    let branch = |sign: i8| {
        let mut samples = Vec::new();
        let mut notes = Vec::new();
        for &mu1 in mu1_grid {
            if x(mu1) > 0.0 {
                let mu2 = sign as f64 * 2.0 * params.alpha * x(mu1).powf(0.5 * params.q as f64);
                samples.push((mu1, mu2));
            } else {
                notes.push(format!("skipped mu1 = {mu1}: mu1 l1 >= 0"));
            }
        }
        BifurcationCurve {
            name: CurveName::L_pf,
            branch: sign,
            samples,
            analytic: true,
            notes,
        }
    };
    [branch(1), branch(-1)]
}

/// `L_pq`: the line `mu1 = 0`.
pub fn curve_lpq(mu2_grid: &[f64]) -> BifurcationCurve {
    BifurcationCurve {
        name: CurveName::L_pq,
        branch: 0,
        samples: mu2_grid.iter().map(|&mu2| (0.0, mu2)).collect(),
        analytic: true,
        notes: Vec::new(),
    }
}

/// Locates one branch of the pitchfork curve numerically with
/// [`pitchfork_scan`] around the leading-order value at each `mu1`.
pub fn refine_lpf(params: &FlowParams, mu1_grid: &[f64], branch: i8) -> Result<BifurcationCurve> {
    atlas_params(params)?;
    let sign = if branch >= 0 { 1.0 } else { -1.0 };
    let mut samples = Vec::new();
    let mut notes = Vec::new();
    for &mu1 in mu1_grid {
        let Some(m) = lpf_magnitude(params, mu1) else {
            notes.push(format!("skipped mu1 = {mu1}: mu1 l1 >= 0"));
            continue;
        };
        let path = ParamPath {
            base: params.clone().with_mu1(mu1)?,
            parameter: SweepParameter::Mu2,
        };
        let (a, b) = (sign * 0.4 * m, sign * 1.6 * m);
        let window = (a.min(b), a.max(b));
        let found = pitchfork_scan(&path, window)?;
        match found.iter().find(|pt| !pt.inconclusive) {
            Some(pt) => samples.push((mu1, pt.value)),
            None => notes.push(format!("no pitchfork detected at mu1 = {mu1} in {window:?}")),
        }
    }
    let name = if params.model == FlowModel::ReversibleNonCons {
        CurveName::L_pf_reversible
    } else {
        CurveName::L_pf
    };
    Ok(BifurcationCurve {
        name,
        branch: sign as i8,
        samples,
        analytic: false,
        notes,
    })
}

fn position_region(params: &FlowParams, mu1: f64, mu2: f64) -> RegionId {
    match lpf_magnitude(params, mu1) {
        None => RegionId::I,
        Some(m) if mu2.abs() < m => RegionId::III,
        Some(_) if mu2 > 0.0 => RegionId::II,
        Some(_) => RegionId::IV,
    }
}

fn near_boundary(params: &FlowParams, mu1: f64, mu2: f64) -> bool {
    if let Some(m) = lpf_magnitude(params, mu1) {
        if (mu2.abs() - m).abs() <= BOUNDARY_TUBE * m {
            return true;
        }
    }
    // near L_pq, measured against the mu1 at which L_pf reaches the same mu2
    let mu1_pf = params.l1().abs() * (mu2.abs() / (2.0 * params.alpha.abs())).powf(2.0 / params.q as f64);
    mu1.abs() <= BOUNDARY_TUBE * mu1_pf || mu1 == 0.0
}

fn census_region(census: &Census, q: usize, mu2: f64) -> Option<RegionId> {
    match census.total() {
        0 => Some(RegionId::I),
        n if n == 2 * q && mu2 > 0.0 => Some(RegionId::II),
        n if n == 2 * q && mu2 < 0.0 => Some(RegionId::IV),
        n if n == 4 * q => Some(RegionId::III),
        _ => None,
    }
}

/// Classifies the point `(mu1, mu2)` of the family `params`.
pub fn classify_region(mu1: f64, mu2: f64, params: &FlowParams) -> Result<AtlasRegion> {
    atlas_params(params)?;
    let p = params.clone().with_mu1(mu1)?.with_mu2(mu2)?;
    let eqs = find_equilibria(&p)?;
    let garland = assemble_garland(&eqs, &p);
    let census = Census::of(&garland.equilibria);
    let position_id = position_region(&p, mu1, mu2);
    let by_census = census_region(&census, p.q as usize, mu2);
    let id = by_census.unwrap_or(position_id);
    Ok(AtlasRegion {
        id,
        position_id,
        sample_params: p.clone(),
        garland_label: garland.label,
        census,
        census_mismatch: by_census.is_none(),
        disagreement: id != position_id,
        boundary: near_boundary(&p, mu1, mu2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub mu1_min: f64,
    pub mu1_max: f64,
    pub mu2_min: f64,
    pub mu2_max: f64,
}

impl Window {
    pub fn square(half: f64) -> Self {
        Self {
            mu1_min: -half,
            mu1_max: half,
            mu2_min: -half,
            mu2_max: half,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.mu1_min, self.mu1_max, self.mu2_min, self.mu2_max]
            .iter()
            .all(|v| v.is_finite())
            && self.mu1_min < self.mu1_max
            && self.mu2_min < self.mu2_max;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid atlas window {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub mu1: f64,
    pub mu2: f64,
    pub region: RegionId,
    pub label: GarlandLabel,
    pub census: Census,
    pub boundary: bool,
    pub disagreement: bool,
}

/// Which symmetric family a branch of `L_pf` absorbs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchAssignment {
    pub branch: i8,
    pub mu1: f64,
    /// Parity `k mod 2` of the involution line `psi = k pi/q` of the family.
    pub family_parity: u8,
    /// Kind of that family just inside region III.
    pub kind_inside: EquilibriumKind,
    /// Kind of that family just outside region III.
    pub kind_outside: EquilibriumKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasDocument {
    pub window: Window,
    pub resolution: usize,
    pub params: FlowParams,
    /// Row-major with `mu1` varying fastest.
    pub grid: Vec<GridPoint>,
    pub curves: Vec<BifurcationCurve>,
    /// One representative per region present, taken away from the curves.
    pub representatives: Vec<AtlasRegion>,
    pub branch_assignments: Vec<BranchAssignment>,
    /// Heuristic only: cells where two saddle levels of the Hamiltonian swap
    /// order. Empty for non-Hamiltonian models.
    pub heteroclinic_band: Vec<(f64, f64)>,
}

impl AtlasDocument {
    pub fn regions(&self) -> BTreeSet<RegionId> {
        self.grid.iter().map(|g| g.region).collect()
    }
}

/// Saddle levels keyed by the parity of the involution line the saddle sits
/// on; `None` when a parity has no saddle.
fn saddle_level_gap(p: &FlowParams, eqs: &[Equilibrium]) -> Option<f64> {
    let mut levels: [Option<f64>; 2] = [None, None];
    for e in eqs.iter().filter(|e| e.kind == EquilibriumKind::Saddle && e.reversible) {
        let parity = axis_parity(p, e.state.psi) as usize;
        levels[parity] = Some(hamiltonian(p, e.state).ok()?);
    }
    let (a, b) = (levels[0]?, levels[1]?);
    let scale = a.abs().max(b.abs());
    (scale > 0.0).then(|| (a - b) / scale)
}

fn axis_parity(p: &FlowParams, psi: f64) -> u8 {
    let k = ((psi - p.axis_offset()) / (std::f64::consts::PI / p.q as f64)).round() as i64;
    k.rem_euclid(2) as u8
}

fn branch_assignment(params: &FlowParams, mu1: f64, branch: i8) -> Result<Option<BranchAssignment>> {
    let Some(m) = lpf_magnitude(params, mu1) else {
        return Ok(None);
    };
    let sign = branch as f64;
    let family_kind = |mu2: f64, parity: Option<u8>| -> Result<Option<(u8, EquilibriumKind)>> {
        let p = params.clone().with_mu1(mu1)?.with_mu2(mu2)?;
        let eqs = find_equilibria(&p)?;
        let parity = match parity {
            Some(par) => par,
            None => {
                // the family nearest the non-symmetric equilibria
                let off: Vec<&Equilibrium> = eqs.iter().filter(|e| e.symmetry == SymmetryClass::NonSymmetric).collect();
                let on: Vec<&Equilibrium> = eqs.iter().filter(|e| e.symmetry != SymmetryClass::NonSymmetric).collect();
                let Some(first) = off.first() else { return Ok(None) };
                let nearest = on.iter().min_by(|a, b| {
                    let da = (a.z - first.z).norm();
                    let db = (b.z - first.z).norm();
                    da.total_cmp(&db)
                });
                match nearest {
                    Some(e) => axis_parity(&p, e.state.psi),
                    None => return Ok(None),
                }
            }
        };
        Ok(eqs
            .iter()
            .find(|e| e.reversible && axis_parity(&p, e.state.psi) == parity)
            .map(|e| (parity, e.kind)))
    };
    let Some((parity, kind_inside)) = family_kind(sign * 0.9 * m, None)? else {
        return Ok(None);
    };
    let Some((_, kind_outside)) = family_kind(sign * 1.1 * m, Some(parity))? else {
        return Ok(None);
    };
    Ok(Some(BranchAssignment {
        branch,
        mu1,
        family_parity: parity,
        kind_inside,
        kind_outside,
    }))
}

/// Sweeps a `resolution x resolution` grid over `window`.
pub fn atlas_sweep(window: Window, resolution: usize, params: &FlowParams) -> Result<AtlasDocument> {
    atlas_params(params)?;
    window.validate()?;
    if !(2..=MAX_RESOLUTION).contains(&resolution) {
        return Err(Error::Config(format!("resolution must lie in 2..={MAX_RESOLUTION}, got {resolution}")));
    }
    let mu1s = linspace(window.mu1_min, window.mu1_max, resolution);
    let mu2s = linspace(window.mu2_min, window.mu2_max, resolution);

    struct Cell {
        point: GridPoint,
        gap: Option<f64>,
    }
    let cells: Vec<Cell> = (0..resolution * resolution)
        .into_par_iter()
        .map(|idx| {
            let (mu1, mu2) = (mu1s[idx % resolution], mu2s[idx / resolution]);
            let p = params.clone().with_mu1(mu1)?.with_mu2(mu2)?;
            let eqs = find_equilibria(&p)?;
            let garland = assemble_garland(&eqs, &p);
            let census = Census::of(&garland.equilibria);
            let position_id = position_region(&p, mu1, mu2);
            let region = census_region(&census, p.q as usize, mu2).unwrap_or(position_id);
            Ok(Cell {
                point: GridPoint {
                    mu1,
                    mu2,
                    region,
                    label: garland.label,
                    census,
                    boundary: near_boundary(&p, mu1, mu2),
                    disagreement: region != position_id,
                },
                gap: saddle_level_gap(&p, &garland.equilibria),
            })
        })
        .collect::<Result<_>>()?;

    let mut heteroclinic_band = Vec::new();
    if hamiltonian(params, crate::flow::PolarState { r: 0.1, psi: 0.0 }).is_ok() {
        for j in 0..resolution {
            for i in 0..resolution {
                let here = &cells[j * resolution + i];
                let Some(g) = here.gap else { continue };
                let right = (i + 1 < resolution).then(|| cells[j * resolution + i + 1].gap).flatten();
                let up = (j + 1 < resolution).then(|| cells[(j + 1) * resolution + i].gap).flatten();
                let crosses = [right, up].iter().flatten().any(|&h| h.signum() != g.signum());
                if crosses || g.abs() < HETEROCLINIC_TOL {
                    heteroclinic_band.push((here.point.mu1, here.point.mu2));
                }
            }
        }
    }

    let mut representatives: Vec<AtlasRegion> = Vec::new();
    for id in [RegionId::I, RegionId::II, RegionId::III, RegionId::IV] {
        // the clean cell of this region farthest from the window edges
        let best = cells
            .iter()
            .filter(|c| c.point.region == id && !c.point.boundary && !c.point.disagreement)
            .min_by(|a, b| {
                let score = |c: &Cell| {
                    let u = (c.point.mu1 - 0.5 * (window.mu1_min + window.mu1_max)) / (window.mu1_max - window.mu1_min);
                    let v = (c.point.mu2 - 0.5 * (window.mu2_min + window.mu2_max)) / (window.mu2_max - window.mu2_min);
                    u.abs().max(v.abs())
                };
                score(a).total_cmp(&score(b))
            });
        if let Some(c) = best {
            let p = params.clone().with_mu1(c.point.mu1)?.with_mu2(c.point.mu2)?;
            representatives.push(AtlasRegion {
                id,
                position_id: position_region(&p, c.point.mu1, c.point.mu2),
                sample_params: p,
                garland_label: c.point.label,
                census: c.point.census,
                census_mismatch: false,
                disagreement: false,
                boundary: false,
            });
        }
    }

    let mut curves = curve_lpf(params, &mu1s).to_vec();
    curves.push(curve_lpq(&mu2s));

    let probe_mu1 = if params.l1() > 0.0 {
        0.5 * window.mu1_min
    } else {
        0.5 * window.mu1_max
    };
    let mut branch_assignments = Vec::new();
    for branch in [1i8, -1] {
        if let Some(m) = lpf_magnitude(params, probe_mu1) {
            if 1.1 * m <= window.mu2_max.abs().max(window.mu2_min.abs()) {
                if let Some(a) = branch_assignment(params, probe_mu1, branch)? {
                    branch_assignments.push(a);
                }
            }
        }
    }

    Ok(AtlasDocument {
        window,
        resolution,
        params: params.clone(),
        grid: cells.into_iter().map(|c| c.point).collect(),
        curves,
        representatives,
        branch_assignments,
        heteroclinic_band,
    })
}
