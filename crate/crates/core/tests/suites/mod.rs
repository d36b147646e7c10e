//! Randomized invariants for every module, shared by the property and
//! acceptance targets.

use std::fs;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ness::cli;
use ness::lmpo::{build_mpo, expectation_value, mpo_to_dense};
use ness::model::{
    dissipator, interleaved_to_density, interleaved_to_stacked, local_superoperator_terms,
    lowering_jump, pauli, unvectorize, vectorize, ModelSpec, Pauli,
};
use ness::mps::{self, overlap, Direction, MpsState};
use ness::oracle::{
    dense_liouvillian, dense_observable, evolve_rk4, ness_null_space, suggested_dt,
};
use ness::sweeper::{
    assemble_local, global_residual, EnvironmentCache, Solver, Status, SweepSchedule,
};
use ness::tensor::{
    arnoldi_eigs, contract, eig, hermitian_eigenvalues, qr, svd_truncated, vdot, ArnoldiOptions,
    Matrix, Tensor, C64, ONE, ZERO,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cval(r: &mut ChaCha8Rng) -> C64 {
    C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

fn random_tensor(shape: &[usize], r: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| cval(r))
}

fn random_matrix(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| cval(r))
}

fn random_mps(n: usize, bond: usize, r: &mut ChaCha8Rng) -> MpsState {
    let bonds: Vec<usize> = (0..=n)
        .map(|k| if k == 0 || k == n { 1 } else { bond })
        .collect();
    let sites = (0..n)
        .map(|k| random_tensor(&[bonds[k], 4, bonds[k + 1]], r))
        .collect();
    MpsState::from_sites(sites, 2).unwrap()
}

fn random_spec(n: usize, r: &mut ChaCha8Rng) -> ModelSpec {
    let j = r.random_range(-2.0..2.0);
    let v = if r.random_bool(0.5) { 0.5 * j } else { 0.0 };
    ModelSpec::ising(n, r.random_range(-2.0..2.0), j, v, r.random_range(0.1..2.0)).unwrap()
}

/// Dense interleaved-order Liouvillian summed from the per-site term lists.
fn assemble_terms(spec: &ModelSpec) -> Matrix {
    let model = spec.to_model();
    let n = spec.n_sites;
    let p = 4usize;
    let dim = p.pow(n as u32);
    let mut l = Matrix::zeros(dim, dim);
    for site in 0..n {
        for term in local_superoperator_terms(&model, site).unwrap() {
            let mut m = Matrix::identity(p.pow(site as u32));
            for op in &term.operators {
                m = m.kron(op);
            }
            let rest = n - site - term.operators.len();
            m = m.kron(&Matrix::identity(p.pow(rest as u32)));
            l += &m.scale(term.coefficient);
        }
    }
    l
}

/// Interleaved vector of `rho`.
fn interleave(rho: &Matrix, n: usize) -> Vec<C64> {
    let stacked = vectorize(rho);
    (0..stacked.len())
        .map(|i| stacked[interleaved_to_stacked(i, n, 2)])
        .collect()
}

fn identity_row_defect(l: &Matrix, n: usize) -> f64 {
    let id = interleave(&Matrix::identity(1 << n), n);
    (0..l.cols())
        .map(|c| {
            (0..l.rows())
                .map(|r| id[r].conj() * l[(r, c)])
                .sum::<C64>()
                .norm()
        })
        .fold(0.0, f64::max)
}

fn exact_schedule(n: usize, seed: u64) -> SweepSchedule {
    let d = 4usize.pow(n.div_ceil(2) as u32);
    SweepSchedule {
        d_start: d.min(8),
        d_max: d,
        seed,
        ..SweepSchedule::default()
    }
}

fn observables(rho: &Matrix, n: usize) -> Vec<C64> {
    let (x, z) = (pauli(Pauli::X), pauli(Pauli::Z));
    let mut out = Vec::new();
    for m in 0..n {
        out.push(dense_observable(rho, &z, &[m]).unwrap());
        for l in 1..n - m {
            out.push(dense_observable(rho, &x, &[m, m + l]).unwrap());
        }
    }
    out
}

fn mps_observables(state: &MpsState) -> Vec<C64> {
    let (x, z) = (pauli(Pauli::X), pauli(Pauli::Z));
    let n = state.n_sites();
    let mut out = Vec::new();
    for m in 0..n {
        out.push(mps::expectation(state, &z, m).unwrap());
        for l in 1..n - m {
            out.push(mps::correlation(state, &x, &x, m, m + l).unwrap());
        }
    }
    out
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub const CASES: u32 = 100;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: CASES,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

// tensor

pub fn contraction_is_linear_in_each_argument() {
    proptest!(config(), |(seed in any::<u64>(), a0 in 1usize..4, k in 1usize..5, b1 in 1usize..4, re in -3.0..3.0f64, im in -3.0..3.0f64)| {
        let mut r = rng(seed);
        let a = random_tensor(&[a0, k, 2], &mut r);
        let b = random_tensor(&[2, b1, k], &mut r);
        let alpha = C64::new(re, im);
        let axes = [(1, 2), (2, 0)];
        let base = contract(&a, &b, &axes).unwrap();
        let left = contract(&a.scale(alpha), &b, &axes).unwrap();
        let right = contract(&a, &b.scale(alpha), &axes).unwrap();
        let scaled = base.scale(alpha);
        let tol = 1e-12 * (1.0 + scaled.norm());
        prop_assert!(left.max_abs_diff(&scaled) < tol);
        prop_assert!(right.max_abs_diff(&scaled) < tol);
    });
}

pub fn reshape_commutes_with_contraction() {
    proptest!(config(), |(seed in any::<u64>(), p in 1usize..4, q in 1usize..4, s in 1usize..4, t in 1usize..4, u in 1usize..4)| {
        let mut r = rng(seed);
        let a = random_tensor(&[p, q, s, t], &mut r);
        let b = random_tensor(&[s, t, u], &mut r);
        let full = contract(&a, &b, &[(2, 0), (3, 1)]).unwrap();
        let fused = contract(
            &a.clone().reshape(&[p * q, s * t]).unwrap(),
            &b.clone().reshape(&[s * t, u]).unwrap(),
            &[(1, 0)],
        )
        .unwrap()
        .reshape(&[p, q, u])
        .unwrap();
        prop_assert!(full.max_abs_diff(&fused) < 1e-12 * (1.0 + full.norm()));
    });
}

pub fn qr_reconstructs_with_orthonormal_q() {
    proptest!(config(), |(seed in any::<u64>(), rows in 1usize..12, cols in 1usize..12)| {
        let mut r = rng(seed);
        let m = random_matrix(rows, cols, &mut r);
        let (q, rr) = qr(&m);
        let back = q.matmul(&rr).unwrap();
        prop_assert!(back.max_abs_diff(&m) < 1e-12 * m.norm_fro().max(1.0));
        let gram = q.adjoint().matmul(&q).unwrap();
        prop_assert!(gram.max_abs_diff(&Matrix::identity(q.cols())) < 1e-12);
    });
}

pub fn svd_keeps_the_frobenius_weight() {
    proptest!(config(), |(seed in any::<u64>(), rows in 1usize..10, cols in 1usize..10, keep in 1usize..10)| {
        let mut r = rng(seed);
        let m = random_matrix(rows, cols, &mut r);
        let full = svd_truncated(&m, rows.min(cols), 0.0).unwrap();
        prop_assert!(full.reconstruct().max_abs_diff(&m) < 1e-12 * m.norm_fro().max(1.0));
        let cut = svd_truncated(&m, keep, 0.0).unwrap();
        let kept: f64 = cut.s.iter().map(|s| s * s).sum();
        let total = m.norm_fro().powi(2);
        prop_assert!((kept + cut.discarded_weight - total).abs() < 1e-12 * total.max(1.0));
        prop_assert!(cut.s.windows(2).all(|w| w[0] >= w[1]));
    });
}

pub fn arnoldi_on_hermitian_input_is_real() {
    proptest!(config(), |(seed in any::<u64>(), n in 4usize..40, nev in 1usize..4)| {
        let mut r = rng(seed);
        let a = random_matrix(n, n, &mut r);
        let h = &a + &a.adjoint();
        let opts = ArnoldiOptions { nev: nev.min(n - 1), krylov_dim: n.min(20), max_restarts: 50, tol: 1e-12, seed, ..Default::default() };
        let res = arnoldi_eigs(|x, y| y.copy_from_slice(&h.matvec(x).unwrap()), n, None, &opts).unwrap();
        for pair in &res.pairs {
            prop_assert!(pair.value.im.abs() < 1e-10, "{}", pair.value);
        }
    });
}

// model

pub fn term_sets_preserve_the_trace() {
    proptest!(config(), |(seed in any::<u64>(), n in 1usize..5)| {
        let spec = random_spec(n, &mut rng(seed));
        let l = assemble_terms(&spec);
        prop_assert!(identity_row_defect(&l, n) < 1e-12);
    });
}

pub fn term_sets_preserve_hermiticity() {
    proptest!(config(), |(seed in any::<u64>(), n in 1usize..4)| {
        let mut r = rng(seed);
        let spec = random_spec(n, &mut r);
        let l = assemble_terms(&spec);
        let rho = random_matrix(1 << n, 1 << n, &mut r);
        let drho = interleaved_to_density(&l.matvec(&interleave(&rho, n)).unwrap(), n, 2).unwrap();
        let drho_dag = interleaved_to_density(&l.matvec(&interleave(&rho.adjoint(), n)).unwrap(), n, 2).unwrap();
        prop_assert!(drho.adjoint().max_abs_diff(&drho_dag) < 1e-12);
    });
}

pub fn single_site_dissipator_spectrum() {
    proptest!(config(), |(gamma in 0.01..10.0f64)| {
        let (mut values, _) = eig(&dissipator(&lowering_jump(gamma).unwrap())).unwrap();
        values.sort_by(|a, b| b.re.total_cmp(&a.re));
        let expected = [0.0, -gamma / 2.0, -gamma / 2.0, -gamma];
        for (v, e) in values.iter().zip(expected) {
            prop_assert!((v - C64::new(e, 0.0)).norm() < 1e-12 * gamma.max(1.0));
        }
    });
}

// lmpo

pub fn mpo_matches_the_dense_liouvillian() {
    proptest!(config(), |(seed in any::<u64>(), n in 1usize..6)| {
        let spec = random_spec(n, &mut rng(seed));
        let m = mpo_to_dense(&build_mpo(&spec).unwrap()).unwrap();
        let l = dense_liouvillian(&spec).unwrap().matrix;
        let map: Vec<usize> = (0..m.rows()).map(|i| interleaved_to_stacked(i, n, 2)).collect();
        let mut diff = 0.0f64;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                diff = diff.max((m[(i, j)] - l[(map[i], map[j])]).norm());
            }
        }
        prop_assert!(diff < 1e-12, "{diff}");
    });
}

pub fn mpo_keeps_identity_as_left_null_vector() {
    proptest!(config(), |(seed in any::<u64>(), n in 1usize..6)| {
        let spec = random_spec(n, &mut rng(seed));
        let m = mpo_to_dense(&build_mpo(&spec).unwrap()).unwrap();
        prop_assert!(identity_row_defect(&m, n) < 1e-12);
    });
}

pub fn mpo_bond_does_not_grow_with_the_chain() {
    proptest!(config(), |(seed in any::<u64>(), n in 3usize..40)| {
        let mut r = rng(seed);
        let j = r.random_range(-2.0..2.0);
        let v = r.random_range(0.1..2.0);
        let bond = |n, v| build_mpo(&ModelSpec::ising(n, 1.0, j, v, 1.0).unwrap()).unwrap().bond_dim();
        prop_assert_eq!(bond(n, 0.0), 4);
        prop_assert_eq!(bond(n, v), 6);
    });
}

// mps

pub fn canonical_identities_survive_center_moves() {
    proptest!(config(), |(seed in any::<u64>(), n in 2usize..6, bond in 1usize..6, moves in prop::collection::vec(any::<bool>(), 0..12))| {
        let mut r = rng(seed);
        let mut state = random_mps(n, bond, &mut r);
        state.canonicalize(r.random_range(0..n)).unwrap();
        for right in moves {
            let c = state.center();
            let dir = if (right && c + 1 < n) || c == 0 { Direction::Right } else { Direction::Left };
            state.move_center(dir, 64, 0.0).unwrap();
        }
        let c = state.center();
        for k in 0..n {
            let t = state.site(k);
            let s = t.shape();
            let gram = if k < c {
                let a = t.to_matrix(2);
                a.adjoint().matmul(&a).unwrap()
            } else if k > c {
                let b = t.to_matrix(1);
                b.matmul(&b.adjoint()).unwrap()
            } else {
                continue;
            };
            let dim = if k < c { s[2] } else { s[0] };
            prop_assert!(gram.max_abs_diff(&Matrix::identity(dim)) < 1e-10);
        }
    });
}

pub fn overlap_is_conjugate_symmetric() {
    proptest!(config(), |(seed in any::<u64>(), n in 1usize..6, ba in 1usize..5, bb in 1usize..5)| {
        let mut r = rng(seed);
        let a = random_mps(n, ba, &mut r);
        let b = random_mps(n, bb, &mut r);
        let ab = overlap(&a, &b).unwrap();
        let ba = overlap(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-12 * ab.norm().max(1.0));
    });
}

pub fn expectations_ignore_global_scale() {
    proptest!(config(), |(seed in any::<u64>(), n in 2usize..6, bond in 1usize..5, re in 0.1..5.0f64, im in -5.0..5.0f64)| {
        let mut r = rng(seed);
        let state = random_mps(n, bond, &mut r);
        let site = r.random_range(0..n);
        let (x, z) = (pauli(Pauli::X), pauli(Pauli::Z));
        let before = (mps::expectation(&state, &z, site), mps::correlation(&state, &x, &z, 0, n - 1));
        let mut scaled = state.clone();
        scaled.scale(C64::new(re, im));
        let after = (mps::expectation(&scaled, &z, site), mps::correlation(&scaled, &x, &z, 0, n - 1));
        // random states can have a vanishing trace; then both sides must refuse
        match (before, after) {
            ((Ok(a), Ok(b)), (Ok(c), Ok(d))) => {
                let tol = 1e-9 * (1.0 + a.norm() + b.norm());
                prop_assert!((a - c).norm() < tol && (b - d).norm() < tol);
            }
            ((Err(_), _), (Err(_), _)) | ((_, Err(_)), (_, Err(_))) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    });
}

pub fn converged_short_chains_are_physical() {
    proptest!(config(), |(seed in any::<u64>(), n in 2usize..4)| {
        let mut r = rng(seed);
        let spec = random_spec(n, &mut r);
        let (state, report) = Solver::new(&spec, &exact_schedule(n, seed)).unwrap().run().unwrap();
        prop_assert_eq!(report.status, Status::Converged);
        let rho = interleaved_to_density(&state.reconstruct_dense().unwrap(), n, 2).unwrap();
        let rho = rho.scale(ONE / rho.trace());
        prop_assert!(rho.max_abs_diff(&rho.adjoint()) < 1e-8);
        let herm = (&rho + &rho.adjoint()).scale(C64::new(0.5, 0.0));
        let min = hermitian_eigenvalues(&herm).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-7, "{min}");
    });
}

// sweeper

pub fn local_form_equals_the_global_expectation() {
    proptest!(config(), |(seed in any::<u64>(), n in 1usize..6, bond in 1usize..5)| {
        let mut r = rng(seed);
        let spec = random_spec(n, &mut r);
        let mpo = build_mpo(&spec).unwrap();
        let mut state = random_mps(n, bond, &mut r);
        let center = r.random_range(0..n);
        state.canonicalize(center).unwrap();
        let envs = EnvironmentCache::new(&state, &mpo).unwrap();
        let (left, right) = envs.around(center).unwrap();
        let local = assemble_local(left, mpo.site(center).tensor(), right, ZERO, usize::MAX).unwrap();
        let v = state.site(center).data().to_vec();
        let mut lv = vec![ZERO; v.len()];
        local.apply(&v, &mut lv).unwrap();
        let local_value = vdot(&v, &lv);
        let global = expectation_value(&mpo, &state).unwrap();
        prop_assert!((local_value - global).norm() < 1e-10 * (1.0 + global.norm()));
    });
}

pub fn incremental_environments_match_rebuilds() {
    proptest!(config(), |(seed in any::<u64>(), n in 2usize..6, bond in 1usize..5, moves in prop::collection::vec(any::<bool>(), 1..10))| {
        let mut r = rng(seed);
        let spec = random_spec(n, &mut r);
        let mpo = build_mpo(&spec).unwrap();
        let mut state = random_mps(n, bond, &mut r);
        state.canonicalize(0).unwrap();
        let mut envs = EnvironmentCache::new(&state, &mpo).unwrap();
        for right in moves {
            let c = state.center();
            if (right && c + 1 < n) || c == 0 {
                state.move_center(Direction::Right, 64, 0.0).unwrap();
                envs.update_left(&state, &mpo, c).unwrap();
            } else {
                state.move_center(Direction::Left, 64, 0.0).unwrap();
                envs.update_right(&state, &mpo, c).unwrap();
            }
            let c = state.center();
            let fresh = EnvironmentCache::new(&state, &mpo).unwrap();
            let (l0, r0) = envs.around(c).unwrap();
            let (l1, r1) = fresh.around(c).unwrap();
            prop_assert!(l0.max_abs_diff(l1) < 1e-10 * (1.0 + l1.norm()));
            prop_assert!(r0.max_abs_diff(r1) < 1e-10 * (1.0 + r1.norm()));
        }
    });
}

pub fn converged_runs_match_the_dense_steady_state() {
    proptest!(config(), |(seed in any::<u64>(), n in 2usize..4)| {
        let mut r = rng(seed);
        let spec = random_spec(n, &mut r);
        let schedule = exact_schedule(n, seed);
        let (state, report) = Solver::new(&spec, &schedule).unwrap().run().unwrap();
        prop_assert_eq!(report.status, Status::Converged);
        let mpo = build_mpo(&spec).unwrap();
        prop_assert!(global_residual(&state, &mpo).unwrap() < schedule.residual_tol);
        let last = report.records.last().unwrap();
        prop_assert!(last.max_abs_eigenvalue.unwrap() <= 10.0 * schedule.residual_tol);
        let exact = observables(&ness_null_space(&dense_liouvillian(&spec).unwrap()).unwrap().rho, n);
        let got = mps_observables(&state);
        for (g, e) in got.iter().zip(&exact) {
            prop_assert!((g - e).norm() <= 1e-6 * e.norm().max(1.0), "{g} vs {e}");
        }
    });
}

pub fn fixed_seed_runs_are_bit_stable() {
    proptest!(config(), |(seed in any::<u64>(), n in 2usize..4)| {
        let spec = random_spec(n, &mut rng(seed));
        let schedule = exact_schedule(n, seed);
        let (_, a) = Solver::new(&spec, &schedule).unwrap().run().unwrap();
        let (_, b) = Solver::new(&spec, &schedule).unwrap().run().unwrap();
        prop_assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            let (x, y) = (x.min_abs_eigenvalue.unwrap_or(0.0), y.min_abs_eigenvalue.unwrap_or(0.0));
            prop_assert!((x - y).abs() <= 1e-12);
        }
    });
}

// oracle

pub fn evolution_preserves_the_trace() {
    proptest!(config(), |(seed in any::<u64>(), n in 1usize..3, t in 0.1..5.0f64)| {
        let mut r = rng(seed);
        let spec = random_spec(n, &mut r);
        let l = dense_liouvillian(&spec).unwrap();
        let a = random_matrix(1 << n, 1 << n, &mut r);
        let rho = a.matmul(&a.adjoint()).unwrap();
        let rho = rho.scale(ONE / rho.trace());
        let out = unvectorize(&evolve_rk4(&l, &vectorize(&rho), suggested_dt(&l), t).unwrap()).unwrap();
        prop_assert!((out.trace() - ONE).norm() < 1e-8);
    });
}

pub fn null_space_state_is_a_density_matrix() {
    proptest!(config(), |(seed in any::<u64>(), n in 1usize..5)| {
        let spec = random_spec(n, &mut rng(seed));
        let ns = ness_null_space(&dense_liouvillian(&spec).unwrap()).unwrap();
        prop_assume!(ns.gap > 1e-8);
        prop_assert!(ns.rho.max_abs_diff(&ns.rho.adjoint()) < 1e-12);
        prop_assert!((ns.rho.trace() - ONE).norm() < 1e-12);
        prop_assert!(ns.min_eigenvalue >= -1e-10, "{}", ns.min_eigenvalue);
    });
}

pub fn null_space_evolution_and_sweeps_agree() {
    proptest!(config(), |(seed in any::<u64>())| {
        let mut r = rng(seed);
        let mut spec = random_spec(2, &mut r);
        spec.gamma = r.random_range(0.5..2.0);
        let l = dense_liouvillian(&spec).unwrap();
        let ns = ness_null_space(&l).unwrap();
        let (values, _) = eig(&l.matrix).unwrap();
        let rate = values.iter().map(|v| -v.re).filter(|&x| x > 1e-9).fold(f64::INFINITY, f64::min);
        let rho0 = vectorize(&Matrix::identity(4).scale(C64::new(0.25, 0.0)));
        let t_final = 40.0 / rate;
        let late = unvectorize(&evolve_rk4(&l, &rho0, suggested_dt(&l), t_final).unwrap()).unwrap();
        let (state, _) = Solver::new(&spec, &exact_schedule(2, seed)).unwrap().run().unwrap();
        let exact = observables(&ns.rho, 2);
        prop_assert!(max_diff(&observables(&late, 2), &exact) < 1e-6);
        prop_assert!(max_diff(&mps_observables(&state), &exact) < 1e-6);
    });
}

// cli

pub fn output_is_reproducible_and_verify_only_adds_columns() {
    proptest!(config(), |(seed in 0u64..1000, h in -2.0..2.0f64)| {
        let dir = tempfile::tempdir().unwrap();
        let run = |name: &str, verify: bool| {
            let out = dir.path().join(name);
            let text = format!("n_sites = 2\nh = {h}\nd_max = 4\nseed = {seed}\nverify = {verify}\nformat = 'both'\nout = '{}'\n", out.display());
            let path = dir.path().join(format!("{name}.toml"));
            fs::write(&path, text).unwrap();
            cli::execute(&cli::parse_config(Some(&path), &Default::default()).unwrap()).unwrap();
            (fs::read_to_string(out.join("results.csv")).unwrap(), fs::read(out.join("results.json")).unwrap())
        };
        let (csv_a, json_a) = run("a", false);
        let (csv_b, _) = run("b", false);
        let (csv_v, _) = run("v", true);
        prop_assert_eq!(&csv_a, &csv_b);
        let json_b = fs::read(dir.path().join("b/results.json")).unwrap();
        // wall-clock timings are the only fields allowed to differ
        let strip = |j: &[u8]| {
            let mut v: serde_json::Value = serde_json::from_slice(j).unwrap();
            for point in v["points"].as_array_mut().unwrap() {
                for rec in point["report"]["records"].as_array_mut().unwrap() {
                    rec["wall_time_s"] = serde_json::Value::Null;
                }
            }
            v
        };
        prop_assert_eq!(strip(&json_a), strip(&json_b));
        for (plain, verified) in csv_a.lines().zip(csv_v.lines()) {
            prop_assert!(verified.starts_with(plain) && verified.len() > plain.len());
        }
    });
}

/// Every property, by name.
#[allow(dead_code)]
pub const ALL: &[(&str, fn())] = &[
    (
        "contraction_is_linear_in_each_argument",
        contraction_is_linear_in_each_argument,
    ),
    (
        "reshape_commutes_with_contraction",
        reshape_commutes_with_contraction,
    ),
    (
        "qr_reconstructs_with_orthonormal_q",
        qr_reconstructs_with_orthonormal_q,
    ),
    (
        "svd_keeps_the_frobenius_weight",
        svd_keeps_the_frobenius_weight,
    ),
    (
        "arnoldi_on_hermitian_input_is_real",
        arnoldi_on_hermitian_input_is_real,
    ),
    ("term_sets_preserve_the_trace", term_sets_preserve_the_trace),
    (
        "term_sets_preserve_hermiticity",
        term_sets_preserve_hermiticity,
    ),
    (
        "single_site_dissipator_spectrum",
        single_site_dissipator_spectrum,
    ),
    (
        "mpo_matches_the_dense_liouvillian",
        mpo_matches_the_dense_liouvillian,
    ),
    (
        "mpo_keeps_identity_as_left_null_vector",
        mpo_keeps_identity_as_left_null_vector,
    ),
    (
        "mpo_bond_does_not_grow_with_the_chain",
        mpo_bond_does_not_grow_with_the_chain,
    ),
    (
        "canonical_identities_survive_center_moves",
        canonical_identities_survive_center_moves,
    ),
    (
        "overlap_is_conjugate_symmetric",
        overlap_is_conjugate_symmetric,
    ),
    (
        "expectations_ignore_global_scale",
        expectations_ignore_global_scale,
    ),
    (
        "converged_short_chains_are_physical",
        converged_short_chains_are_physical,
    ),
    (
        "local_form_equals_the_global_expectation",
        local_form_equals_the_global_expectation,
    ),
    (
        "incremental_environments_match_rebuilds",
        incremental_environments_match_rebuilds,
    ),
    (
        "converged_runs_match_the_dense_steady_state",
        converged_runs_match_the_dense_steady_state,
    ),
    (
        "fixed_seed_runs_are_bit_stable",
        fixed_seed_runs_are_bit_stable,
    ),
    (
        "evolution_preserves_the_trace",
        evolution_preserves_the_trace,
    ),
    (
        "null_space_state_is_a_density_matrix",
        null_space_state_is_a_density_matrix,
    ),
    (
        "null_space_evolution_and_sweeps_agree",
        null_space_evolution_and_sweeps_agree,
    ),
    (
        "output_is_reproducible_and_verify_only_adds_columns",
        output_is_reproducible_and_verify_only_adds_columns,
    ),
];
