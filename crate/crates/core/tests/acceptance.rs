//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

use garland_core::atlas::{atlas_sweep, lpf_magnitude, refine_lpf, RegionId, Window};
use garland_core::equilibria::{
    assemble_garland, find_equilibria, EquilibriumKind, GarlandLabel, PairKind,
};
use garland_core::flow::{
    divergence, hamiltonian, integrate, polar_jacobian, vector_field_cartesian, vector_field_polar, FlowParams,
    PolarState,
};
use garland_core::linalg::{log_log_slope, Mat2};
use garland_core::maps::{find_periodic_orbits, same_orbit_set, symmetry_pairing, MapGarlandLabel, OrbitKind, SeedPolicy, TwistKickMap};
use garland_core::normal_form::{normalize, resonant_terms_up_to};
use garland_core::{Monomial, ResonanceSpec};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn angle_gap(a: f64, b: f64) -> f64 {
    (b - a).rem_euclid(2.0 * PI)
}

fn symmetric_census() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for q in [3u32, 5, 7] {
        for alpha in [1.0, -1.0] {
            let p = FlowParams::symmetric(q, -0.01, vec![1.0], alpha).unwrap();
            let eqs = find_equilibria(&p).unwrap();
            let n = eqs.len();
            let alternating = (0..n).all(|i| {
                let (a, b) = (eqs[i].kind, eqs[(i + 1) % n].kind);
                matches!(
                    (a, b),
                    (EquilibriumKind::Saddle, EquilibriumKind::Center) | (EquilibriumKind::Center, EquilibriumKind::Saddle)
                )
            });
            let spacing = (0..n)
                .map(|i| (angle_gap(eqs[i].state.psi, eqs[(i + 1) % n].state.psi) - PI / (2 * q) as f64).abs())
                .fold(0.0, f64::max);
            let empty = find_equilibria(&p.clone().with_mu1(0.01).unwrap()).unwrap().is_empty();
            let pass = n == 4 * q as usize && alternating && spacing < 1e-6 && empty;
            ok &= pass;
            notes.push(format!("q={q} a={alpha:+}: n={n} spacing_err={spacing:.1e}{}", if empty { "" } else { " mu>0 nonempty" }));
        }
    }
    (ok, notes.join("; "))
}

fn scaling_laws() -> Outcome {
    let mus = [-1e-2, -5e-3, -2.5e-3];
    let xs: Vec<f64> = mus.iter().map(|m: &f64| m.abs()).collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for q in [3u32, 5, 7] {
        let mut dev = Vec::new();
        let mut lam_s = Vec::new();
        let mut lam_c = Vec::new();
        for &mu in &mus {
            let p = FlowParams::symmetric(q, mu, vec![1.0, 0.5], 1.0).unwrap();
            let eqs = find_equilibria(&p).unwrap();
            dev.push(eqs.iter().map(|e| (e.state.r + mu / p.l1()).abs()).fold(0.0, f64::max));
            let pick = |k: EquilibriumKind| {
                eqs.iter()
                    .filter(|e| e.kind == k)
                    .map(|e| (e.eigenvalues[0] * e.eigenvalues[0]).norm())
                    .fold(0.0, f64::max)
            };
            lam_s.push(pick(EquilibriumKind::Saddle));
            lam_c.push(pick(EquilibriumKind::Center));
        }
        let s_r = log_log_slope(&xs, &dev).unwrap_or(f64::NAN);
        let s_s = log_log_slope(&xs, &lam_s).unwrap_or(f64::NAN);
        let s_c = log_log_slope(&xs, &lam_c).unwrap_or(f64::NAN);
        let qf = q as f64;
        let pass = (s_r - 2.0).abs() <= 0.2 && (s_s - qf).abs() <= 0.15 && (s_c - qf).abs() <= 0.15;
        ok &= pass;
        notes.push(format!("q={q}: radius {s_r:.3}, lambda^2 saddle {s_s:.3} center {s_c:.3}"));
    }
    (ok, notes.join("; "))
}

fn atlas_regions() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for alpha in [1.0, -1.0] {
        let p = FlowParams::sym_break(3, -0.01, 0.0, vec![1.0], alpha).unwrap();
        let doc = atlas_sweep(Window::square(0.02), 64, &p).unwrap();
        let regions: BTreeSet<RegionId> = doc.regions();
        let mut bad = 0usize;
        let mut mismatched = 0usize;
        for g in &doc.grid {
            if g.boundary {
                continue;
            }
            if g.disagreement {
                mismatched += 1;
            }
            let c = &g.census;
            let good = match g.region {
                RegionId::I => c.total() == 0,
                RegionId::II | RegionId::IV => {
                    g.label == GarlandLabel::G_qq && c.saddle == 3 && c.center == 3 && c.total() == 6
                }
                RegionId::III => {
                    c.total() == 12
                        && c.non_symmetric == 6
                        && if alpha > 0.0 {
                            c.non_symmetric_center == 6 && c.saddle == 6
                        } else {
                            c.non_symmetric_saddle == 6 && c.center == 6
                        }
                }
            };
            if !good {
                bad += 1;
            }
        }
        let pass = regions.len() == 4 && bad == 0 && mismatched == 0;
        ok &= pass;
        notes.push(format!(
            "alpha={alpha:+}: {} regions, {bad} census violations, {mismatched} census/position disagreements off the curves",
            regions.len()
        ));
    }
    (ok, notes.join("; "))
}

fn pitchfork_curve() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for alpha in [1.0, -1.0] {
        let p = FlowParams::sym_break(3, -0.01, 0.0, vec![1.0], alpha).unwrap();
        let analytic = lpf_magnitude(&p, -0.01).unwrap();
        for branch in [1i8, -1] {
            let c = refine_lpf(&p, &[-0.01], branch).unwrap();
            let found = c.samples.first().map(|s| s.1);
            let pass = found.is_some_and(|v| (v.abs() - analytic).abs() <= 0.1 * analytic && v.signum() == branch as f64);
            ok &= pass;
            notes.push(format!(
                "alpha={alpha:+} branch {branch:+}: {} vs {:.4e}",
                found.map_or("none".to_string(), |v| format!("{v:.4e}")),
                branch as f64 * analytic
            ));
        }
    }
    (ok, notes.join("; "))
}

fn normal_form_conjugacy() -> Outcome {
    let spec = ResonanceSpec::new(1, 3, true).unwrap();
    let resonant: BTreeSet<Monomial> = resonant_terms_up_to(7, &spec, true).into_iter().collect();
    let mut worst = f64::INFINITY;
    let mut support_ok = true;
    for i in 0..20u64 {
        let f = common::random_symmetric_map(&spec, 7, 0x5eed_0000 + i, 0.5);
        let nf = normalize(&f, &spec).unwrap();
        let support: BTreeSet<Monomial> = nf
            .normalized_map
            .terms()
            .filter(|(m, c)| m.degree() >= 2 && c.norm() > 1e-12)
            .map(|(m, _)| m)
            .collect();
        support_ok &= support == resonant;
        let n2q = nf.normalized_map.filter(|m| m.degree() <= 2 * spec.q);
        let (order, _) = common::conjugacy_order(&f, &nf.transform, &n2q);
        worst = worst.min(order);
    }
    let pass = support_ok && worst >= 2.0 * 3.0 + 0.7;
    (pass, format!("support matches resonant set: {support_ok}; worst fitted order {worst:.3} (need >= 6.7)"))
}

fn conservation_symmetry() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // Hamiltonian drift
    let conservative = [
        FlowParams::symmetric(3, -0.01, vec![1.0, 0.5], 1.0).unwrap(),
        FlowParams::sym_break(3, -0.01, 1e-3, vec![1.0], 1.0).unwrap(),
        FlowParams::reversible(3, -0.01, 1e-3, vec![1.0], 1.0, 0.5, 2.0).unwrap(),
    ];
    let mut drift: f64 = 0.0;
    let mut steps = 0usize;
    let mut swept: f64 = f64::INFINITY;
    for p in &conservative {
        for z0 in [Complex64::from_polar(0.12, 0.3), Complex64::from_polar(0.08, 1.0)] {
            let traj = integrate(p, z0, 100.0, 1e-10).unwrap();
            let h0 = hamiltonian(p, PolarState::from_z(z0)).unwrap();
            steps += traj.z.len();
            swept = swept.min((traj.last() - z0).norm() / z0.norm());
            for z in &traj.z {
                drift = drift.max((hamiltonian(p, PolarState::from_z(*z)).unwrap() - h0).abs());
            }
        }
    }
    ok &= drift < 1e-8;
    notes.push(format!("H drift {drift:.1e} ({steps} steps, min relative displacement {swept:.2})"));

    // S1, S3 and reversibility
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    // absolute errors; relative ones are ill-conditioned where F nearly vanishes
    let mut s1: f64 = 0.0;
    let mut s3: f64 = 0.0;
    let mut rev: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut rel = |a: Complex64, b: Complex64| {
        worst_rel = worst_rel.max((a - b).norm() / a.norm().max(b.norm()).max(1e-300));
        (a - b).norm()
    };
    for q in [3u32, 5] {
        let sym = FlowParams::symmetric(q, -0.01, vec![1.0, 0.5], 1.0).unwrap();
        let flipped = FlowParams::symmetric(q, -0.01, vec![1.0, 0.5], -1.0).unwrap();
        let others = [
            FlowParams::sym_break(q, -0.01, 3e-3, vec![1.0, -0.4], 1.0).unwrap(),
            FlowParams::reversible(q, -0.01, 0.1, vec![1.0], -1.0, 1.0, 0.3).unwrap(),
        ];
        let w1 = Complex64::from_polar(1.0, PI / q as f64);
        let w3 = Complex64::from_polar(1.0, PI / (2 * q) as f64);
        for _ in 0..100 {
            let z = common::random_disc_point(&mut rng, 0.3);
            s1 = s1.max(rel(vector_field_cartesian(&sym, w1 * z), w1 * vector_field_cartesian(&sym, z)));
            s3 = s3.max(rel(vector_field_cartesian(&sym, w3 * z), w3 * vector_field_cartesian(&flipped, z)));
            for p in std::iter::once(&sym).chain(others.iter()) {
                rev = rev.max(rel(-vector_field_cartesian(p, z.conj()).conj(), vector_field_cartesian(p, z)));
            }
        }
    }
    ok &= s1 < 1e-14 && s3 < 1e-14 && rev < 1e-14;
    notes.push(format!("S1 {s1:.1e}, S3 {s3:.1e}, reversibility {rev:.1e} (worst relative {worst_rel:.1e})"));

    // divergence
    let mut div: f64 = 0.0;
    for p in &conservative[..2] {
        for _ in 0..100 {
            div = div.max(divergence(p, common::random_disc_point(&mut rng, 0.3)).abs());
        }
    }
    ok &= div < 1e-14;
    notes.push(format!("conservative divergence {div:.1e}"));

    // opposite divergence of reversible pitchfork pairs
    let p = FlowParams::reversible(3, -0.01, 1e-3, vec![1.0], 1.0, 1.0, 0.0).unwrap();
    let g = assemble_garland(&find_equilibria(&p).unwrap(), &p);
    let pairs: Vec<(f64, f64)> = g
        .pairing
        .iter()
        .filter(|pr| pr.kind == PairKind::Reversible)
        .map(|pr| (g.equilibria[pr.first].divergence, g.equilibria[pr.second].divergence))
        .collect();
    let sum = pairs.iter().map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    let nonzero = pairs.iter().all(|(a, _)| a.abs() > 1e-10);
    ok &= pairs.len() == 3 && sum < 1e-10 && nonzero;
    notes.push(format!("{} reversible pairs, max |d1+d2| {sum:.1e}", pairs.len()));
    (ok, notes.join("; "))
}

fn map_transfer() -> Outcome {
    let m = TwistKickMap::new(1, 3, -0.01, vec![1.0], 1.0).unwrap();
    let spec = ResonanceSpec::new(1, 3, true).unwrap();
    let s = find_periodic_orbits(&m, &spec, 3, &SeedPolicy::default()).unwrap();
    let saddles = s.orbits.iter().filter(|o| o.kind == OrbitKind::SaddleMap).count();
    let elliptic = s.orbits.iter().filter(|o| o.kind == OrbitKind::Elliptic).count();
    let det = s.orbits.iter().map(|o| (o.jacobian_det - 1.0).abs()).fold(0.0, f64::max);
    let g = symmetry_pairing(&s.orbits, true);
    let central = g.pairs.iter().filter(|p| p.2 == garland_core::maps::PartnerKind::Central).count();
    let same = !s.blind.is_empty() && same_orbit_set(&s.flow_informed, &s.blind);
    let pass = s.orbits.len() == 4
        && saddles == 2
        && elliptic == 2
        && det < 1e-9
        && central == 2
        && g.label == MapGarlandLabel::G22_qq
        && same;
    (
        pass,
        format!(
            "{} orbits ({saddles} saddle, {elliptic} elliptic), max |det-1| {det:.1e}, {central} central pairs, blind == flow-informed: {same}",
            s.orbits.len()
        ),
    )
}

fn fd_polar_jacobian(p: &FlowParams, r: f64, psi: f64) -> Mat2 {
    let f = |r: f64, psi: f64| vector_field_polar(p, PolarState { r, psi }).unwrap();
    let hr = 1e-5 * r;
    let hp = 1e-5;
    let (a1, a2) = (f(r + hr, psi), f(r - hr, psi));
    let (b1, b2) = (f(r, psi + hp), f(r, psi - hp));
    Mat2::new(
        (a1.0 - a2.0) / (2.0 * hr),
        (b1.0 - b2.0) / (2.0 * hp),
        (a1.1 - a2.1) / (2.0 * hr),
        (b1.1 - b2.1) / (2.0 * hp),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut models = Vec::new();
    for q in [3u32, 5, 7] {
        models.push(FlowParams::symmetric(q, -0.01, vec![1.0, 0.5], 1.0).unwrap());
        models.push(FlowParams::symmetric(q, -0.01, vec![1.0], -1.0).unwrap().with_theta(1.1).unwrap());
    }
    models.push(FlowParams::sym_break(3, -0.01, 5e-4, vec![1.0], 1.0).unwrap());
    models.push(FlowParams::sym_break(3, -0.01, 0.01, vec![1.0], -1.0).unwrap());
    models.push(FlowParams::reversible(3, -0.01, 1e-3, vec![1.0], 1.0, 1.0, 0.0).unwrap());
    models.push(FlowParams::reversible(5, -0.02, 1e-3, vec![1.0, 0.2], 1.0, 0.7, 2.3).unwrap());

    let mut jac: f64 = 0.0;
    let mut count = 0usize;
    let mut field: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for p in &models {
        for e in find_equilibria(p).unwrap() {
            let fd = fd_polar_jacobian(p, e.state.r, e.state.psi);
            let an = polar_jacobian(p, e.state.r, e.state.psi);
            jac = jac.max(fd.sub(&an).max_abs() / an.max_abs());
            count += 1;
        }
        for _ in 0..50 {
            let z = common::random_disc_point(&mut rng, 0.4);
            let s = PolarState::from_z(z);
            let (dr, dpsi) = vector_field_polar(p, s).unwrap();
            // r = |z|^2, so rho' = r'/(2 rho)
            let rho = s.r.sqrt();
            let from_polar = Complex64::new(dr / (2.0 * rho), rho * dpsi) * Complex64::from_polar(1.0, s.psi);
            let cart = vector_field_cartesian(p, z);
            field = field.max((from_polar - cart).norm() / cart.norm());
        }
    }
    let pass = count > 0 && jac < 1e-6 && field < 1e-12;
    (
        pass,
        format!("{count} equilibria over {} models: FD Jacobian rel err {jac:.1e}; polar vs cartesian rel err {field:.1e}", models.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("symmetric census q=3,5,7", symmetric_census),
        ("radius and eigenvalue scaling", scaling_laws),
        ("two-parameter atlas q=3", atlas_regions),
        ("pitchfork curve at mu1=-0.01", pitchfork_curve),
        ("normal-form support and conjugacy", normal_form_conjugacy),
        ("conservation and symmetry", conservation_symmetry),
        ("map transfer q=3", map_transfer),
        ("oracle equivalence", oracle_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = run();
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name} ({:.1}s): {detail}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
