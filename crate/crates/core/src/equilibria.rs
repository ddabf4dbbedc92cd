//! Nonzero equilibria of the truncated flows, their classification, and the
//! garlands they form.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{divergence, polar_jacobian, polar_unchecked, FlowParams, PolarState};
use crate::json;
use crate::linalg::{geomspace, linspace, Mat2};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Roots closer than this in the `(r, r dpsi)` metric are merged.
pub const DEDUP_RADIUS: f64 = 1e-7;
/// Angular tolerance for lying on an involution line.
pub const AXIS_TOL: f64 = 1e-9;
/// `|Re l| < REAL_PART_TOL |l|` counts as a zero real part.
pub const REAL_PART_TOL: f64 = 1e-9;
const DET_TOL: f64 = 1e-8;
const RADIAL_GRID: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Saddle,
    Center,
    StableFocus,
    UnstableFocus,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    /// On one of the involution lines of the model.
    CentrallySymmetricAxis,
    NonSymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub state: PolarState,
    #[serde(with = "json::complex")]
    pub z: Complex64,
    #[serde(with = "json::complex_pair")]
    pub eigenvalues: [Complex64; 2],
    pub kind: EquilibriumKind,
    pub divergence: f64,
    pub symmetry: SymmetryClass,
    /// Fixed by a reversing involution (lies on an involution line).
    pub reversible: bool,
    /// Field residual in the scaled metric used by the solver.
    pub residual: f64,
    /// Analytic Jacobian of `(r', psi')` with respect to `(r, psi)`.
    pub jacobian: Mat2,
}

impl Equilibrium {
    /// True when the divergence is negligible against the eigenvalues.
    pub fn is_conservative(&self) -> bool {
        let scale = self.eigenvalues[0].norm().max(self.eigenvalues[1].norm());
        self.divergence.abs() <= REAL_PART_TOL * scale.max(f64::MIN_POSITIVE)
    }
}

/// Solver settings; the defaults follow the module constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub newton_tol: f64,
    pub max_iter: usize,
    pub dedup_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton_tol: NEWTON_TOL,
            max_iter: NEWTON_MAX_ITER,
            dedup_radius: DEDUP_RADIUS,
        }
    }
}

/// Magnitudes of the terms of `(r', psi')`, used to make the residual
/// scale-free.
fn residual_weights(p: &FlowParams, r: f64) -> (f64, f64) {
    let qf = p.q as f64;
    let rh = r.powf(0.5 * qf);
    let ab = p.a.abs() + p.b.abs();
    let m2 = p.mu2.abs();
    let w1 = 2.0 * (m2 * rh + p.alpha.abs() * r.powi(p.q as i32) + m2 * ab * rh * r);
    let phi_abs: f64 = p
        .phi_coeffs
        .iter()
        .enumerate()
        .map(|(j, l)| l.abs() * r.powi(j as i32 + 1))
        .sum();
    let w2 = p.mu1.abs() + phi_abs + m2 * rh / r + p.alpha.abs() * r.powi(p.q as i32 - 1) + m2 * ab * rh;
    (w1.max(f64::MIN_POSITIVE), w2.max(f64::MIN_POSITIVE))
}

fn scaled_residual(p: &FlowParams, r: f64, psi: f64) -> f64 {
    let (dr, dpsi) = polar_unchecked(p, r, psi);
    let (w1, w2) = residual_weights(p, r);
    (dr.abs() / w1).max(dpsi.abs() / w2)
}

fn newton(p: &FlowParams, r0: f64, psi0: f64, opts: &SolverOptions, r_max: f64) -> Option<(f64, f64, f64)> {
    let (mut r, mut psi) = (r0, psi0);
    let mut res = scaled_residual(p, r, psi);
    for _ in 0..opts.max_iter {
        if res < opts.newton_tol {
            return Some((r, psi, res));
        }
        let (dr, dpsi) = polar_unchecked(p, r, psi);
        let step = polar_jacobian(p, r, psi).solve([dr, dpsi])?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let (rn, pn) = (r - t * step[0], psi - t * step[1]);
            if rn > 0.0 && rn < 4.0 * r_max {
                let rn_res = scaled_residual(p, rn, pn);
                if rn_res < res || rn_res < opts.newton_tol {
                    r = rn;
                    psi = pn;
                    res = rn_res;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (res < opts.newton_tol).then_some((r, psi, res))
}

/// Roots of `psi'(., psi)` on a log grid over `(0, r_max]`, refined by
/// bisection.
fn radial_roots(p: &FlowParams, psi: f64, r_max: f64) -> Vec<f64> {
    let grid = geomspace(1e-12_f64.min(r_max * 1e-3), r_max, RADIAL_GRID);
    let g = |r: f64| polar_unchecked(p, r, psi).1;
    let mut out = Vec::new();
    let mut prev = (grid[0], g(grid[0]));
    for &r in &grid[1..] {
        let v = g(r);
        if prev.1 == 0.0 {
            out.push(prev.0);
        } else if prev.1.signum() != v.signum() {
            let (mut lo, mut hi, mut flo) = (prev.0, r, prev.1);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = g(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = (r, v);
    }
    out
}

/// Angles with `mu2 (1 + (B - A) r) + 2 alpha r^{q/2} cos(q psi) = 0`, where
/// the radial equation has its off-axis solutions.
fn off_axis_angles(p: &FlowParams, r: f64) -> Vec<f64> {
    if p.mu2 == 0.0 || r <= 0.0 {
        return Vec::new();
    }
    let qf = p.q as f64;
    let c = -p.mu2 * (1.0 + (p.b - p.a) * r) / (2.0 * p.alpha * r.powf(0.5 * qf));
    if c.abs() > 1.0 {
        return Vec::new();
    }
    let base = c.acos();
    (0..p.q)
        .flat_map(|k| {
            let shift = TAU * k as f64;
            [(base + shift) / qf, (-base + shift) / qf]
        })
        .collect()
}

/// Radii solving `mu1 + Phi(r) - alpha r^{q-1} = 0`, the off-axis radius
/// of the conservative models.
fn off_axis_radii(p: &FlowParams, r_max: f64) -> Vec<f64> {
    let g = |r: f64| p.mu1 + p.phi(r) - p.alpha * r.powi(p.q as i32 - 1);
    let grid = geomspace(1e-12_f64.min(r_max * 1e-3), r_max, RADIAL_GRID);
    let mut out = Vec::new();
    for w in grid.windows(2) {
        let (a, b) = (g(w[0]), g(w[1]));
        if a.signum() != b.signum() {
            let (mut lo, mut hi, mut flo) = (w[0], w[1], a);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = g(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Jacobian, eigenvalues, divergence, kind and symmetry at a polar state.
pub fn classify_state(p: &FlowParams, state: PolarState) -> Equilibrium {
    let jacobian = polar_jacobian(p, state.r, state.psi);
    let eigenvalues = jacobian.eigenvalues();
    let z = state.to_z();
    let on_axis = p.axis_distance(state.psi) < AXIS_TOL;
    let mut e = Equilibrium {
        state,
        z,
        eigenvalues,
        kind: EquilibriumKind::Degenerate,
        divergence: divergence(p, z),
        symmetry: if on_axis {
            SymmetryClass::CentrallySymmetricAxis
        } else {
            SymmetryClass::NonSymmetric
        },
        reversible: on_axis,
        residual: scaled_residual(p, state.r, state.psi),
        jacobian,
    };
    e.kind = kind_of(&jacobian);
    e
}

fn kind_of(j: &Mat2) -> EquilibriumKind {
    let det = j.det();
    let tr = j.trace();
    let scale = (j.a * j.d).abs() + (j.b * j.c).abs();
    if det.abs() <= DET_TOL * scale || !det.is_finite() {
        EquilibriumKind::Degenerate
    } else if det < 0.0 {
        EquilibriumKind::Saddle
    } else if (0.5 * tr).abs() < REAL_PART_TOL * det.sqrt() {
        EquilibriumKind::Center
    } else if tr < 0.0 {
        EquilibriumKind::StableFocus
    } else {
        EquilibriumKind::UnstableFocus
    }
}

/// Recomputes the analytic Jacobian and everything derived from it.
pub fn classify(p: &FlowParams, e: &Equilibrium) -> Equilibrium {
    classify_state(p, e.state)
}

/// All nonzero equilibria with `|z|` below the validity radius, sorted by
/// angle.
pub fn find_equilibria(p: &FlowParams) -> Result<Vec<Equilibrium>> {
    find_equilibria_with(p, &SolverOptions::default())
}

pub fn find_equilibria_with(p: &FlowParams, opts: &SolverOptions) -> Result<Vec<Equilibrium>> {
    p.validate()?;
    if p.l1() == 0.0 || p.alpha == 0.0 {
        return Err(Error::Domain("nondegeneracy requires l1 != 0 and alpha != 0".into()));
    }
    let q = p.q;
    let r_max = p.validity_radius * p.validity_radius;

    let mut angles: Vec<f64> = linspace(0.0, TAU, 4 * q as usize + 9)[..4 * q as usize + 8].to_vec();
    let spacing = p.axis_spacing();
    let n_axes = (TAU / spacing).round() as usize;
    angles.extend((0..n_axes).map(|k| p.axis_offset() + k as f64 * spacing));

    let mut seeds: Vec<(f64, f64)> = Vec::new();
    let mut radii: Vec<f64> = off_axis_radii(p, r_max);
    for &psi in &angles {
        for r in radial_roots(p, psi, r_max) {
            seeds.push((r, psi));
            radii.push(r);
        }
    }
    for &r in &radii {
        for psi in off_axis_angles(p, r) {
            seeds.push((r, psi));
        }
    }

    let mut found: Vec<(f64, f64, f64)> = Vec::new();
    for (r0, psi0) in seeds {
        let Some((r, psi, res)) = newton(p, r0, psi0, opts, r_max) else {
            continue;
        };
        if !(r > 0.0 && r < r_max) {
            continue;
        }
        let psi = psi.rem_euclid(TAU);
        let dup = found.iter().any(|&(r2, psi2, _)| {
            let dr = r - r2;
            let arc = 0.5 * (r + r2) * angle_diff(psi, psi2);
            (dr * dr + arc * arc).sqrt() < opts.dedup_radius
        });
        if !dup {
            found.push((r, psi, res));
        }
    }

    if found.is_empty() && p.mu1 * p.l1() < 0.0 {
        return Err(Error::Solver(format!(
            "no equilibrium converged although mu1 l1 < 0 (mu1 = {}, l1 = {})",
            p.mu1,
            p.l1()
        )));
    }
    let mut out: Vec<Equilibrium> = found
        .into_iter()
        .map(|(r, psi, _)| {
            // snap onto an involution line when within tolerance
            let d = p.axis_distance(psi);
            let psi = if d < AXIS_TOL {
                let k = ((psi - p.axis_offset()) / spacing).round();
                (p.axis_offset() + k * spacing).rem_euclid(TAU)
            } else {
                psi
            };
            classify_state(p, PolarState { r, psi })
        })
        .collect();
    out.sort_by(|a, b| a.state.psi.total_cmp(&b.state.psi));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum GarlandLabel {
    G_qq,
    G_2q2q,
    G_prime_2q_q_q,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    /// `z <-> -z`.
    Central,
    /// Mirror images in an involution line.
    Reversible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub first: usize,
    pub second: usize,
    pub kind: PairKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Garland {
    /// Sorted by angle.
    pub equilibria: Vec<Equilibrium>,
    pub label: GarlandLabel,
    pub pairing: Vec<Pairing>,
    /// Largest deviation of consecutive angle gaps from `pi/(2q)` (4q
    /// equilibria) or `pi/q` (2q equilibria).
    pub spacing_deviation: f64,
    pub diagnostics: Vec<String>,
}

impl Garland {
    pub fn count(&self, kind: EquilibriumKind) -> usize {
        self.equilibria.iter().filter(|e| e.kind == kind).count()
    }

    pub fn count_symmetric(&self) -> usize {
        self.equilibria
            .iter()
            .filter(|e| e.symmetry == SymmetryClass::CentrallySymmetricAxis)
            .count()
    }
}

const PAIR_TOL: f64 = 1e-7;

fn alternates(eqs: &[Equilibrium]) -> bool {
    let n = eqs.len();
    n > 0
        && (0..n).all(|i| {
            let (a, b) = (eqs[i].kind, eqs[(i + 1) % n].kind);
            matches!(
                (a, b),
                (EquilibriumKind::Saddle, EquilibriumKind::Center) | (EquilibriumKind::Center, EquilibriumKind::Saddle)
            )
        })
}

fn find_partner(eqs: &[Equilibrium], i: usize, target: f64, r: f64) -> Option<usize> {
    eqs.iter().enumerate().position(|(j, e)| {
        j != i && angle_diff(e.state.psi, target) < PAIR_TOL && (e.state.r - r).abs() < PAIR_TOL * r
    })
}

/// Sorts the equilibria by angle, pairs symmetric partners and labels the
/// pattern.
pub fn assemble_garland(equilibria: &[Equilibrium], p: &FlowParams) -> Garland {
    let mut eqs = equilibria.to_vec();
    eqs.sort_by(|a, b| a.state.psi.total_cmp(&b.state.psi));
    let q = p.q as usize;
    let n = eqs.len();
    let mut diagnostics = Vec::new();
    let mut pairing = Vec::new();

    // central partners
    for i in 0..n {
        let e = &eqs[i];
        if let Some(j) = find_partner(&eqs, i, e.state.psi + PI, e.state.r) {
            if i < j {
                pairing.push(Pairing { first: i, second: j, kind: PairKind::Central });
            }
        }
    }
    // mirror partners of off-axis equilibria in their nearest involution line
    let line = PI / p.q as f64;
    let offset = p.axis_offset();
    for i in 0..n {
        let e = &eqs[i];
        if e.symmetry == SymmetryClass::CentrallySymmetricAxis {
            continue;
        }
        let k = ((e.state.psi - offset) / line).round();
        let mirror = 2.0 * (offset + k * line) - e.state.psi;
        if let Some(j) = find_partner(&eqs, i, mirror, e.state.r) {
            if i < j {
                pairing.push(Pairing { first: i, second: j, kind: PairKind::Reversible });
            }
        }
    }

    let gaps: Vec<f64> = (0..n)
        .map(|i| {
            let next = eqs[(i + 1) % n].state.psi;
            (next - eqs[i].state.psi).rem_euclid(TAU)
        })
        .collect();
    let ideal = if n > 0 { TAU / n as f64 } else { 0.0 };
    let spacing_deviation = gaps.iter().map(|g| (g - ideal).abs()).fold(0.0, f64::max);

    let saddles = eqs.iter().filter(|e| e.kind == EquilibriumKind::Saddle).count();
    let centers = eqs.iter().filter(|e| e.kind == EquilibriumKind::Center).count();
    let on_axis: Vec<&Equilibrium> = eqs
        .iter()
        .filter(|e| e.symmetry == SymmetryClass::CentrallySymmetricAxis)
        .collect();
    let off_axis: Vec<&Equilibrium> = eqs
        .iter()
        .filter(|e| e.symmetry == SymmetryClass::NonSymmetric)
        .collect();

    let label = if n == 0 {
        diagnostics.push("no nonzero equilibria".into());
        GarlandLabel::None
    } else if n == 4 * q
        && on_axis.len() == 2 * q
        && on_axis.iter().all(|e| e.is_conservative())
        && off_axis.iter().all(|e| !e.is_conservative())
        && {
            let rev: Vec<&Pairing> = pairing.iter().filter(|pr| pr.kind == PairKind::Reversible).collect();
            rev.len() == q
                && rev.iter().all(|pr| {
                    let (d1, d2) = (eqs[pr.first].divergence, eqs[pr.second].divergence);
                    (d1 + d2).abs() < 1e-10 && d1 * d2 < 0.0
                })
        }
    {
        GarlandLabel::G_prime_2q_q_q
    } else if n == 4 * q && saddles == 2 * q && centers == 2 * q && alternates(&eqs) {
        GarlandLabel::G_2q2q
    } else if n == 2 * q && on_axis.len() == 2 * q && saddles == q && centers == q && alternates(&eqs) {
        GarlandLabel::G_qq
    } else {
        diagnostics.push(format!(
            "{n} equilibria ({saddles} saddles, {centers} centers, {} on involution lines) match no garland pattern",
            on_axis.len()
        ));
        GarlandLabel::None
    };
    if label == GarlandLabel::G_2q2q && spacing_deviation > 1e-6 {
        diagnostics.push(format!("angle gaps deviate from pi/2q by up to {spacing_deviation:.3e}"));
    }
    Garland {
        equilibria: eqs,
        label,
        pairing,
        spacing_deviation,
        diagnostics,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    Mu1,
    Mu2,
}

/// One-parameter family through flow-parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPath {
    pub base: FlowParams,
    pub parameter: SweepParameter,
}

impl ParamPath {
    pub fn at(&self, s: f64) -> Result<FlowParams> {
        match self.parameter {
            SweepParameter::Mu1 => self.base.clone().with_mu1(s),
            SweepParameter::Mu2 => self.base.clone().with_mu2(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    /// The newborn pair are centers or foci; the symmetric point turns saddle.
    Supercritical,
    /// The newborn pair are saddles; the symmetric point turns center.
    Subcritical,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchforkPoint {
    pub value: f64,
    pub criticality: Criticality,
    /// Kind of the non-symmetric equilibria just past the bifurcation.
    pub newborn_kind: Option<EquilibriumKind>,
    /// Side of `value` on which the non-symmetric equilibria exist (+1 / -1).
    pub pair_side: f64,
    /// Number of non-symmetric equilibria on the pair side.
    pub pair_count: usize,
    /// Largest `|d1 + d2|` over mirror pairs of newborn equilibria.
    pub pair_divergence_sum: f64,
    /// Smallest `|d1|` over the same pairs.
    pub pair_divergence_min: f64,
    /// The detection sits at a window endpoint.
    pub inconclusive: bool,
}

fn count_non_symmetric(path: &ParamPath, s: f64) -> Result<usize> {
    let p = path.at(s)?;
    let eqs = match find_equilibria(&p) {
        Ok(e) => e,
        Err(Error::Solver(_)) => return Ok(0),
        Err(e) => return Err(e),
    };
    Ok(eqs.iter().filter(|e| e.symmetry == SymmetryClass::NonSymmetric).count())
}

/// Detects changes in the number of non-symmetric equilibria along `path`
/// over `window`, located by bisection.
pub fn pitchfork_scan(path: &ParamPath, window: (f64, f64)) -> Result<Vec<PitchforkPoint>> {
    pitchfork_scan_with(path, window, 48)
}

pub fn pitchfork_scan_with(path: &ParamPath, window: (f64, f64), samples: usize) -> Result<Vec<PitchforkPoint>> {
    let (lo, hi) = window;
    if !(lo < hi) || samples < 2 {
        return Err(Error::Config("pitchfork window must satisfy lo < hi".into()));
    }
    let width = hi - lo;
    let grid = linspace(lo, hi, samples);
    let counts: Vec<usize> = grid.iter().map(|&s| count_non_symmetric(path, s)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for i in 0..samples - 1 {
        if counts[i] == counts[i + 1] {
            continue;
        }
        let (mut a, mut b) = (grid[i], grid[i + 1]);
        let ca = counts[i];
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if count_non_symmetric(path, mid)? == ca {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-12 * width.max(1e-300) {
                break;
            }
        }
        let value = 0.5 * (a + b);
        let (pair_side, probe_count) = if counts[i + 1] > counts[i] { (1.0, counts[i + 1]) } else { (-1.0, counts[i]) };
        let probe = (value + pair_side * 2e-3 * width).clamp(lo, hi);
        let p = path.at(probe)?;
        let eqs = find_equilibria(&p).unwrap_or_default();
        let garland = assemble_garland(&eqs, &p);
        let newborn: Vec<&Equilibrium> = garland
            .equilibria
            .iter()
            .filter(|e| e.symmetry == SymmetryClass::NonSymmetric)
            .collect();
        let newborn_kind = majority_kind(&newborn);
        let criticality = match newborn_kind {
            Some(EquilibriumKind::Center | EquilibriumKind::StableFocus | EquilibriumKind::UnstableFocus) => {
                Criticality::Supercritical
            }
            Some(EquilibriumKind::Saddle) => Criticality::Subcritical,
            _ => Criticality::Undetermined,
        };
        let mut sum: f64 = 0.0;
        let mut dmin = f64::INFINITY;
        for pr in garland.pairing.iter().filter(|pr| pr.kind == PairKind::Reversible) {
            let (d1, d2) = (garland.equilibria[pr.first].divergence, garland.equilibria[pr.second].divergence);
            sum = sum.max((d1 + d2).abs());
            dmin = dmin.min(d1.abs());
        }
        let edge = 1e-6 * width;
        out.push(PitchforkPoint {
            value,
            criticality,
            newborn_kind,
            pair_side,
            pair_count: probe_count,
            pair_divergence_sum: sum,
            pair_divergence_min: if dmin.is_finite() { dmin } else { 0.0 },
            inconclusive: value - lo < edge || hi - value < edge,
        });
    }
    Ok(out)
}

fn majority_kind(eqs: &[&Equilibrium]) -> Option<EquilibriumKind> {
    use EquilibriumKind::*;
    [Saddle, Center, StableFocus, UnstableFocus, Degenerate]
        .into_iter()
        .map(|k| (k, eqs.iter().filter(|e| e.kind == k).count()))
        .filter(|(_, c)| *c > 0)
        .max_by_key(|(_, c)| *c)
        .map(|(k, _)| k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::vector_field_polar;

    fn sym(q: u32, mu: f64, alpha: f64) -> FlowParams {
        FlowParams::symmetric(q, mu, vec![1.0], alpha).unwrap()
    }

    #[test]
    fn no_equilibria_when_mu_l1_positive() {
        assert!(find_equilibria(&sym(3, 0.01, 1.0)).unwrap().is_empty());
        assert!(find_equilibria(&sym(5, 0.01, -1.0)).unwrap().is_empty());
    }

    #[test]
    fn symmetric_q3_census() {
        let p = sym(3, -0.01, 1.0);
        let eqs = find_equilibria(&p).unwrap();
        assert_eq!(eqs.len(), 12);
        let r_plus = (-1.0 + 1.04f64.sqrt()) / 2.0;
        let r_minus = (1.0 - (1.0f64 - 0.04).sqrt()) / 2.0;
        for (k, e) in eqs.iter().enumerate() {
            assert!(angle_diff(e.state.psi, k as f64 * PI / 6.0) < 1e-12);
            let expected = if k % 2 == 0 { r_plus } else { r_minus };
            assert!((e.state.r - expected).abs() < 1e-14, "{k}: {}", e.state.r);
            assert!(e.residual < 1e-11);
            let expected_kind = if k % 2 == 0 { EquilibriumKind::Saddle } else { EquilibriumKind::Center };
            assert_eq!(e.kind, expected_kind);
        }
        let g = assemble_garland(&eqs, &p);
        assert_eq!(g.label, GarlandLabel::G_2q2q);
        assert_eq!(g.pairing.iter().filter(|pr| pr.kind == PairKind::Central).count(), 6);
        assert!(g.spacing_deviation < 1e-12);
    }

    #[test]
    fn saddle_eigenvalues_match_closed_form() {
        let p = sym(3, -0.01, 1.0);
        let eqs = find_equilibria(&p).unwrap();
        let s = &eqs[0];
        let r = s.state.r;
        let lambda_sq = 12.0 * r.powi(3) * (1.0 + 2.0 * r);
        assert!((lambda_sq - 1.19e-5).abs() < 1e-7);
        assert!((s.eigenvalues[1].re - lambda_sq.sqrt()).abs() < 1e-12);
        assert!((s.eigenvalues[1].re - 3.45e-3).abs() < 1e-5);
        // finite-difference Jacobian
        let h = 1e-7;
        let f = |r: f64, psi: f64| vector_field_polar(&p, PolarState { r, psi }).unwrap();
        let (a, c) = {
            let (p1, p2) = (f(r + h * r, s.state.psi), f(r - h * r, s.state.psi));
            ((p1.0 - p2.0) / (2.0 * h * r), (p1.1 - p2.1) / (2.0 * h * r))
        };
        let (b, d) = {
            let (p1, p2) = (f(r, s.state.psi + h), f(r, s.state.psi - h));
            ((p1.0 - p2.0) / (2.0 * h), (p1.1 - p2.1) / (2.0 * h))
        };
        let fd = Mat2::new(a, b, c, d);
        assert!(fd.sub(&s.jacobian).max_abs() < 1e-6 * s.jacobian.max_abs());
    }

    #[test]
    fn alpha_sign_swaps_kinds() {
        let eqs = find_equilibria(&sym(3, -0.01, -1.0)).unwrap();
        assert_eq!(eqs.len(), 12);
        assert_eq!(eqs[0].kind, EquilibriumKind::Center);
        assert_eq!(eqs[1].kind, EquilibriumKind::Saddle);
    }

    #[test]
    fn empty_garland_has_no_label() {
        let g = assemble_garland(&[], &sym(3, 0.01, 1.0));
        assert_eq!(g.label, GarlandLabel::None);
        assert!(!g.diagnostics.is_empty());
    }

    #[test]
    fn rotated_symmetric_model() {
        let p = sym(5, -0.01, 1.0).with_theta(1.0).unwrap();
        let eqs = find_equilibria(&p).unwrap();
        assert_eq!(eqs.len(), 20);
        let w = p.rotation_angle();
        for e in &eqs {
            assert!(p.axis_distance(e.state.psi) < AXIS_TOL);
            let k = ((e.state.psi - w) / (PI / 10.0)).round();
            assert!(angle_diff(e.state.psi, w + k * PI / 10.0) < 1e-12);
        }
        assert_eq!(assemble_garland(&eqs, &p).label, GarlandLabel::G_2q2q);
    }

    #[test]
    fn sym_break_regions() {
        // region III
        let p = FlowParams::sym_break(3, -0.01, 5e-4, vec![1.0], 1.0).unwrap();
        let g = assemble_garland(&find_equilibria(&p).unwrap(), &p);
        assert_eq!(g.equilibria.len(), 12);
        assert_eq!(g.count_symmetric(), 6);
        assert_eq!(g.label, GarlandLabel::G_2q2q);
        assert!(g
            .equilibria
            .iter()
            .filter(|e| e.symmetry == SymmetryClass::NonSymmetric)
            .all(|e| e.kind == EquilibriumKind::Center));
        // region II
        let p = FlowParams::sym_break(3, -0.01, 0.01, vec![1.0], 1.0).unwrap();
        let g = assemble_garland(&find_equilibria(&p).unwrap(), &p);
        assert_eq!(g.label, GarlandLabel::G_qq);
        assert_eq!(g.count(EquilibriumKind::Saddle), 3);
        assert_eq!(g.count(EquilibriumKind::Center), 3);
    }

    #[test]
    fn pitchfork_location_q3() {
        let base = FlowParams::sym_break(3, -0.01, 0.0, vec![1.0], 1.0).unwrap();
        let path = ParamPath { base, parameter: SweepParameter::Mu2 };
        let pts = pitchfork_scan(&path, (1e-4, 5e-3)).unwrap();
        assert_eq!(pts.len(), 1);
        let analytic = 2.0 * 0.01f64.powf(1.5);
        assert!((pts[0].value - analytic).abs() < 0.1 * analytic, "{}", pts[0].value);
        assert_eq!(pts[0].criticality, Criticality::Supercritical);
        assert_eq!(pts[0].pair_side, -1.0);
        assert!(!pts[0].inconclusive);
    }

    #[test]
    fn pitchfork_absent_in_region_one() {
        let base = FlowParams::sym_break(3, 0.01, 0.0, vec![1.0], 1.0).unwrap();
        let path = ParamPath { base, parameter: SweepParameter::Mu2 };
        assert!(pitchfork_scan(&path, (-0.01, 0.01)).unwrap().is_empty());
    }

    #[test]
    fn reversible_pitchfork_pairs_have_opposite_divergence() {
        let base = FlowParams::reversible(3, -0.01, 0.0, vec![1.0], 1.0, 1.0, 0.0).unwrap();
        let path = ParamPath { base, parameter: SweepParameter::Mu2 };
        let pts = pitchfork_scan(&path, (1e-4, 5e-3)).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].pair_divergence_sum < 1e-10);
        assert!(pts[0].pair_divergence_min > 0.0);
        let p = path.at(1e-3).unwrap();
        let g = assemble_garland(&find_equilibria(&p).unwrap(), &p);
        assert_eq!(g.label, GarlandLabel::G_prime_2q_q_q);
        for e in g.equilibria.iter().filter(|e| e.reversible) {
            assert!(e.divergence.abs() < 1e-12);
        }
    }
}
