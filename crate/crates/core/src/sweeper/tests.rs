use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

use super::*;
use crate::lmpo::{expectation_value, mpo_to_dense};
use crate::model::{interleaved_vector_to_stacked, vectorize};
use crate::mps::random_state;
use crate::oracle::{dense_liouvillian, dense_observable, ness_null_space};
use crate::tensor::{vdot, vec_norm, LuFactor, Matrix, ONE, ZERO};

const BIG: usize = 1 << 30;

fn crand(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn quadratic_form(m: &Matrix, v: &[C64]) -> C64 {
    vdot(v, &m.matvec(v).unwrap())
}

fn exact_schedule(n: usize) -> SweepSchedule {
    let d = 4usize.pow(n.div_ceil(2) as u32);
    SweepSchedule {
        d_start: d.min(8),
        d_max: d,
        ..Default::default()
    }
}

fn null_vector(spec: &ModelSpec) -> Matrix {
    ness_null_space(&dense_liouvillian(spec).unwrap())
        .unwrap()
        .rho
}

#[test]
fn environments_reproduce_dense_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = ModelSpec::ising(3, 0.7, -1.1, 0.4, 0.6).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let dense = mpo_to_dense(&mpo).unwrap();
    let mut state = random_state(3, 4, &mut rng);
    let v = state.reconstruct_dense().unwrap();
    let expected = quadratic_form(&dense, &v);
    for c in 0..3 {
        let mut s = state.clone();
        let norm = s.canonicalize(c).unwrap();
        let envs = EnvironmentCache::new(&s, &mpo).unwrap();
        let got = envs.sandwich(&s, &mpo, c).unwrap() * norm * norm;
        assert_abs_diff_eq!(
            (got - expected).norm(),
            0.0,
            epsilon = 1e-11 * expected.norm().max(1.0)
        );
    }
    state.canonicalize(1).unwrap();
    let envs = EnvironmentCache::new(&state, &mpo).unwrap();
    let direct = expectation_value(&mpo, &state).unwrap();
    assert!((envs.sandwich(&state, &mpo, 1).unwrap() - direct).norm() < 1e-11);
}

#[test]
fn product_state_environments_have_unit_bonds() {
    let spec = ModelSpec::ising(4, 1.0, 1.0, 0.0, 1.0).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let state = MpsState::maximally_mixed(4, 2).unwrap();
    let envs = EnvironmentCache::new(&state, &mpo).unwrap();
    for k in 1..4 {
        let r = envs.right(k).unwrap();
        assert_eq!((r.shape()[0], r.shape()[2]), (1, 1));
    }
    assert!(envs.left(1).is_none());
}

#[test]
fn environment_rejects_mismatched_mpo() {
    let mpo = build_mpo(&ModelSpec::ising(3, 1.0, 1.0, 0.0, 1.0).unwrap()).unwrap();
    let state = MpsState::maximally_mixed(4, 2).unwrap();
    assert!(matches!(
        EnvironmentCache::new(&state, &mpo),
        Err(Error::Usage(_))
    ));
}

#[test]
fn incremental_environments_match_rebuilds() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let spec = ModelSpec::ising(5, -0.3, 1.0, 0.5, 0.9).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let mut state = random_state(5, 6, &mut rng);
    state.canonicalize(0).unwrap();
    let mut envs = EnvironmentCache::new(&state, &mpo).unwrap();
    for k in 0..4 {
        state.move_center(Direction::Right, 64, 0.0).unwrap();
        envs.update_left(&state, &mpo, k).unwrap();
        let fresh = EnvironmentCache::new(&state, &mpo).unwrap();
        let diff = envs
            .left(k + 1)
            .unwrap()
            .max_abs_diff(fresh.left(k + 1).unwrap());
        assert!(diff < 1e-10, "left {k}: {diff}");
    }
    for k in (1..5).rev() {
        state.move_center(Direction::Left, 64, 0.0).unwrap();
        envs.update_right(&state, &mpo, k).unwrap();
        let fresh = EnvironmentCache::new(&state, &mpo).unwrap();
        let diff = envs.right(k).unwrap().max_abs_diff(fresh.right(k).unwrap());
        assert!(diff < 1e-10, "right {k}: {diff}");
    }
}

#[test]
fn single_site_local_problem_is_the_full_liouvillian() {
    let spec = ModelSpec::ising(1, 0.8, 0.0, 0.0, 1.3).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let state = MpsState::maximally_mixed(1, 2).unwrap();
    let envs = EnvironmentCache::new(&state, &mpo).unwrap();
    let (l, r) = envs.around(0).unwrap();
    let problem = assemble_local(l, mpo.site(0).tensor(), r, ZERO, BIG).unwrap();
    assert!(problem.is_dense());
    let dense = dense_liouvillian(&spec).unwrap().matrix;
    assert_eq!(problem.to_dense().unwrap().max_abs_diff(&dense), 0.0);
}

#[test]
fn local_operator_is_the_projected_liouvillian() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let spec = ModelSpec::ising(3, 1.2, 0.9, -0.6, 0.7).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let dense = mpo_to_dense(&mpo).unwrap();
    let mut state = random_state(3, 3, &mut rng);
    state.canonicalize(1).unwrap();
    let envs = EnvironmentCache::new(&state, &mpo).unwrap();
    let (l, r) = envs.around(1).unwrap();
    let problem = assemble_local(l, mpo.site(1).tensor(), r, ZERO, BIG).unwrap();
    let local = problem.to_dense().unwrap();

    // columns of P embed unit centre tensors into the full space
    let shape = state.site(1).shape().to_vec();
    let dim: usize = shape.iter().product();
    let full = 1 << 6;
    let mut p = Matrix::zeros(full, dim);
    for col in 0..dim {
        let mut unit = vec![ZERO; dim];
        unit[col] = ONE;
        let mut s = state.clone();
        s.set_center_tensor(Tensor::from_vec(&shape, unit).unwrap())
            .unwrap();
        for (row, z) in s.reconstruct_dense().unwrap().into_iter().enumerate() {
            p[(row, col)] = z;
        }
    }
    let projected = p.adjoint().matmul(&dense).unwrap().matmul(&p).unwrap();
    assert!(local.max_abs_diff(&projected) < 1e-10);
}

#[test]
fn zero_mpo_gives_zero_local_operator() {
    let spec = ModelSpec::ising(3, 0.0, 0.0, 0.0, 0.0).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = random_state(3, 2, &mut rng);
    state.canonicalize(1).unwrap();
    let envs = EnvironmentCache::new(&state, &mpo).unwrap();
    let (l, r) = envs.around(1).unwrap();
    let problem = assemble_local(l, mpo.site(1).tensor(), r, ZERO, BIG).unwrap();
    assert!(problem.to_dense().unwrap().is_zero());
}

#[test]
fn matrix_free_apply_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = ModelSpec::ising(5, 0.4, 1.0, 0.5, 0.8).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let mut state = random_state(5, 5, &mut rng);
    state.canonicalize(2).unwrap();
    let envs = EnvironmentCache::new(&state, &mpo).unwrap();
    let (l, r) = envs.around(2).unwrap();
    let w = mpo.site(2).tensor();
    let dense = assemble_local(l, w, r, ZERO, BIG).unwrap();
    let free = assemble_local(l, w, r, ZERO, 0).unwrap();
    assert!(!free.is_dense());
    let x: Vec<C64> = (0..dense.dimension()).map(|_| crand(&mut rng)).collect();
    let (mut y1, mut y2) = (vec![ZERO; x.len()], vec![ZERO; x.len()]);
    dense.apply(&x, &mut y1).unwrap();
    free.apply(&x, &mut y2).unwrap();
    let diff = y1
        .iter()
        .zip(&y2)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff}");
}

fn dense_problem(m: Matrix, shift: f64) -> LocalProblem {
    LocalProblem {
        shape: [1, m.rows(), 1],
        operator: LocalOperator::Dense(m),
        target_shift: C64::new(shift, 0.0),
    }
}

#[test]
fn shift_invert_finds_the_zero_of_a_diagonal() {
    let m = Matrix::diag(&[ZERO, ONE, C64::new(-2.0, 3.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let previous = [C64::new(0.6, 0.1), C64::new(0.5, 0.0), C64::new(0.3, -0.2)];
    let sol = shift_invert_solve(
        &dense_problem(m, 1e-6),
        &previous,
        &SolveOptions::default(),
        &mut rng,
    )
    .unwrap();
    assert!(sol.converged);
    assert!(sol.eigenvalue.norm() < 1e-12);
    assert_abs_diff_eq!(sol.vector[0].norm(), 1.0, epsilon = 1e-12);
    let ov = vdot(&sol.vector, &previous);
    assert!(ov.re > 0.0 && ov.im.abs() < 1e-12);
    assert!(sol.vector[1].norm() < 1e-12 && sol.vector[2].norm() < 1e-12);
}

#[test]
fn shift_invert_retries_when_the_shift_is_an_eigenvalue() {
    let m = Matrix::diag(&[C64::new(1e-6, 0.0), ONE, C64::new(-3.0, 0.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let previous = [ONE, ONE, ONE];
    let sol = shift_invert_solve(
        &dense_problem(m, 1e-6),
        &previous,
        &SolveOptions::default(),
        &mut rng,
    )
    .unwrap();
    assert_abs_diff_eq!(sol.shift.re, 1e-5, epsilon = 1e-18);
    assert!((sol.eigenvalue - C64::new(1e-6, 0.0)).norm() < 1e-12);
}

#[test]
fn single_site_solve_returns_the_decayed_state() {
    let spec = ModelSpec::ising(1, 1.0, 0.0, 0.0, 1.0).unwrap();
    let l = dense_liouvillian(&spec).unwrap().matrix;
    let expected = vectorize(&null_vector(&spec));
    let en = vec_norm(&expected);
    for budget in [BIG, 0] {
        let mpo = build_mpo(&spec).unwrap();
        let state = MpsState::maximally_mixed(1, 2).unwrap();
        let envs = EnvironmentCache::new(&state, &mpo).unwrap();
        let (le, re) = envs.around(0).unwrap();
        let problem =
            assemble_local(le, mpo.site(0).tensor(), re, C64::new(1e-6, 0.0), budget).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sol = shift_invert_solve(
            &problem,
            state.site(0).data(),
            &SolveOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert!(sol.eigenvalue.norm() < 1e-9, "{}", sol.eigenvalue);
        assert_abs_diff_eq!(
            vdot(&sol.vector, &expected).norm() / en,
            1.0,
            epsilon = 1e-9
        );
        // |down><down| in column stacking sits at index 3
        assert_abs_diff_eq!(sol.vector[3].norm(), 1.0, epsilon = 1e-9);
        assert!(l
            .matvec(&sol.vector)
            .unwrap()
            .iter()
            .all(|z| z.norm() < 1e-9));
    }
}

#[test]
fn shift_invert_recovers_a_constructed_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 100;
    let mut spectrum: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random_range(-5.0..-0.5), rng.random_range(-4.0..4.0)))
        .collect();
    let nearest = C64::new(-0.02, 0.015);
    spectrum[37] = nearest;
    let s = Matrix::from_fn(n, n, |i, j| {
        crand(&mut rng) + if i == j { C64::new(3.0, 0.0) } else { ZERO }
    });
    let lu = LuFactor::new(&s).unwrap();
    let mut s_inv = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![ZERO; n];
        e[j] = ONE;
        for (i, z) in lu.solve(&e).into_iter().enumerate() {
            s_inv[(i, j)] = z;
        }
    }
    let a = s
        .matmul(&Matrix::diag(&spectrum))
        .unwrap()
        .matmul(&s_inv)
        .unwrap();
    let previous: Vec<C64> = (0..n).map(|_| crand(&mut rng)).collect();
    let sol = shift_invert_solve(
        &dense_problem(a, 1e-6),
        &previous,
        &SolveOptions::default(),
        &mut rng,
    )
    .unwrap();
    assert!(sol.converged);
    assert!(
        (sol.eigenvalue - nearest).norm() < 1e-8,
        "{}",
        sol.eigenvalue
    );
}

#[test]
fn shift_invert_rejects_wrong_start_length() {
    let m = Matrix::diag(&[ZERO, ONE]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = shift_invert_solve(
        &dense_problem(m, 1e-6),
        &[ONE],
        &SolveOptions::default(),
        &mut rng,
    );
    assert!(matches!(r, Err(Error::Dimension { .. })));
}

#[test]
fn single_site_chain_is_solved_in_one_sweep() {
    let spec = ModelSpec::ising(1, 0.5, 0.0, 0.0, 0.7).unwrap();
    let sched = SweepSchedule {
        gamma_start_factor: 1.0,
        ..Default::default()
    };
    let mut solver = Solver::new(&spec, &sched).unwrap();
    solver.step().unwrap();
    let rec = &solver.records()[0];
    assert!(rec.max_abs_eigenvalue.unwrap() < 1e-12);
    assert!(rec.global_residual < 1e-12);
    let z = expectation(&solver.state(), &pauli(Pauli::Z), 0).unwrap();
    assert_abs_diff_eq!(z.re, -1.0, epsilon = 1e-12);
}

#[test]
fn two_sites_match_the_dense_steady_state_within_five_sweeps() {
    let spec = ModelSpec::ising(2, 1.0, 1.0, 0.0, 1.0).unwrap();
    let sched = SweepSchedule {
        d_start: 4,
        d_max: 4,
        gamma_start_factor: 1.0,
        phase1_sweeps: 1,
        ..Default::default()
    };
    let mut solver = Solver::new(&spec, &sched).unwrap();
    for _ in 0..5 {
        solver.step().unwrap();
    }
    let rho = null_vector(&spec);
    let (x, z) = (pauli(Pauli::X), pauli(Pauli::Z));
    let xx = correlation(&solver.state(), &x, &x, 0, 1).unwrap();
    assert!((xx - dense_observable(&rho, &x, &[0, 1]).unwrap()).norm() < 1e-8);
    for i in 0..2 {
        let zi = expectation(&solver.state(), &z, i).unwrap();
        assert!((zi - dense_observable(&rho, &z, &[i]).unwrap()).norm() < 1e-8);
    }
}

#[test]
fn residual_ends_below_the_first_sweep() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let spec = ModelSpec::ising(
            4,
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            0.0,
            rng.random_range(0.3..1.5),
        )
        .unwrap();
        let sched = SweepSchedule {
            d_start: 4,
            d_max: 6,
            d_step: 1,
            gamma_start_factor: 1.0,
            phase1_sweeps: 1,
            seed,
            max_sweeps: 6,
            ..Default::default()
        };
        let (_, report) = run(&spec, &sched).unwrap();
        let res: Vec<f64> = report.records.iter().map(|r| r.global_residual).collect();
        assert!(res[res.len() - 1] < res[0], "seed {seed}: {res:?}");
    }
}

#[test]
fn three_site_run_converges_to_the_dense_answer() {
    let spec = ModelSpec::ising(3, -1.0, 1.0, 0.0, 1.0).unwrap();
    let sched = SweepSchedule {
        d_max: 16,
        ..Default::default()
    };
    let (state, report) = run(&spec, &sched).unwrap();
    assert_eq!(report.status, Status::Converged);
    assert!(report.final_residual < 1e-8);
    let last = report.records.last().unwrap();
    assert!(last.max_abs_eigenvalue.unwrap() <= 10.0 * sched.residual_tol);
    let rho = null_vector(&spec);
    let x = pauli(Pauli::X);
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        let got = correlation(&state, &x, &x, a, b).unwrap();
        let want = dense_observable(&rho, &x, &[a, b]).unwrap();
        assert!((got - want).norm() < 1e-6, "XX({a},{b}): {got} vs {want}");
    }
}

#[test]
fn no_annealing_keeps_gamma_at_target() {
    let spec = ModelSpec::ising(3, 0.5, 1.0, 0.0, 0.4).unwrap();
    let sched = SweepSchedule {
        gamma_start_factor: 1.0,
        max_sweeps: 4,
        ..exact_schedule(3)
    };
    let (_, report) = run(&spec, &sched).unwrap();
    assert!(report.records.iter().all(|r| r.gamma == 0.4));
    assert_eq!(report.gamma_target_reached_at, Some(0));
}

#[test]
fn annealing_follows_the_geometric_schedule() {
    let spec = ModelSpec::ising(3, 0.5, 1.0, 0.0, 0.1).unwrap();
    let sched = SweepSchedule {
        max_sweeps: 12,
        ..exact_schedule(3)
    };
    let mut solver = Solver::new(&spec, &sched).unwrap();
    for _ in 0..12 {
        if solver.step().unwrap().is_some() {
            break;
        }
    }
    for r in solver.records() {
        let want = (0.1 * 10.0 * 0.8f64.powi(r.sweep as i32)).max(0.1);
        assert_abs_diff_eq!(r.gamma, want, epsilon = 1e-15);
    }
}

#[test]
fn global_residual_examples() {
    // N = 1: the exact steady state
    let spec = ModelSpec::ising(1, 0.9, 0.0, 0.0, 0.6).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let v = vectorize(&null_vector(&spec));
    let state = MpsState::from_sites(vec![Tensor::from_vec(&[1, 4, 1], v).unwrap()], 2).unwrap();
    assert!(global_residual(&state, &mpo).unwrap() < 1e-12);

    // N = 2: random state against the dense operator
    let spec = ModelSpec::ising(2, 0.3, -1.4, 0.0, 1.1).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let dense = mpo_to_dense(&mpo).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut state = random_state(2, 4, &mut rng);
    state.normalize();
    let v = state.reconstruct_dense().unwrap();
    let want = vec_norm(&dense.matvec(&v).unwrap()) / vec_norm(&v);
    assert_abs_diff_eq!(
        global_residual(&state, &mpo).unwrap(),
        want,
        epsilon = 1e-11
    );

    // identity commutes with a field-only Hamiltonian
    let spec = ModelSpec::ising(4, 1.7, 0.0, 0.0, 0.0).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let mixed = MpsState::maximally_mixed(4, 2).unwrap();
    assert_eq!(global_residual(&mixed, &mpo).unwrap(), 0.0);
}

#[test]
fn residual_agrees_with_the_stacked_oracle() {
    let spec = ModelSpec::ising(3, -0.4, 0.8, 0.3, 0.5).unwrap();
    let l = dense_liouvillian(&spec).unwrap().matrix;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let state = random_state(3, 8, &mut rng);
    let v = interleaved_vector_to_stacked(&state.reconstruct_dense().unwrap(), 3, 2);
    let want = vec_norm(&l.matvec(&v).unwrap()) / vec_norm(&v);
    let got = global_residual(&state, &build_mpo(&spec).unwrap()).unwrap();
    assert_abs_diff_eq!(got, want, epsilon = 1e-11 * want.max(1.0));
}

#[test]
fn local_rayleigh_quotient_matches_full_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spec = ModelSpec::ising(4, 0.2, 1.0, 0.5, 0.9).unwrap();
    let mpo = build_mpo(&spec).unwrap();
    let mut state = random_state(4, 5, &mut rng);
    for c in 0..4 {
        state.canonicalize(c).unwrap();
        let envs = EnvironmentCache::new(&state, &mpo).unwrap();
        let (l, r) = envs.around(c).unwrap();
        let problem = assemble_local(l, mpo.site(c).tensor(), r, ZERO, BIG).unwrap();
        let v = state.site(c).data();
        let local = quadratic_form(&problem.to_dense().unwrap(), v);
        let full = expectation_value(&mpo, &state).unwrap();
        assert!((local - full).norm() < 1e-10);
    }
}

#[test]
fn runs_are_deterministic() {
    let spec = ModelSpec::ising(4, 0.7, 1.0, 0.5, 0.5).unwrap();
    let sched = SweepSchedule {
        d_start: 4,
        d_max: 8,
        max_sweeps: 8,
        seed: 17,
        ..Default::default()
    };
    let (_, a) = run(&spec, &sched).unwrap();
    let (_, b) = run(&spec, &sched).unwrap();
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.min_abs_eigenvalue.unwrap() - y.min_abs_eigenvalue.unwrap()).abs() <= 1e-12);
        assert!((x.global_residual - y.global_residual).abs() <= 1e-12);
    }
}

#[test]
fn checkpoint_resume_continues_the_same_trajectory() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("run.ckpt");
    let spec = ModelSpec::ising(4, -0.5, 1.0, 0.0, 0.8).unwrap();
    let sched = SweepSchedule {
        d_start: 4,
        d_max: 8,
        max_sweeps: 7,
        ..Default::default()
    };
    let (_, full) = run(&spec, &sched).unwrap();

    let mut first = Solver::new(&spec, &sched).unwrap().with_checkpoint(&path);
    for _ in 0..3 {
        first.step().unwrap();
    }
    drop(first);
    let resumed = Solver::resume(&path).unwrap();
    assert_eq!(resumed.sweeps_done(), 3);
    let (_, report) = resumed.run().unwrap();
    assert_eq!(report.records.len(), full.records.len());
    for (x, y) in report.records.iter().zip(&full.records) {
        assert_eq!(x.sweep, y.sweep);
        assert!(
            (x.global_residual - y.global_residual).abs() <= 1e-12 * y.global_residual.max(1.0)
        );
    }
    assert_eq!(report.status, full.status);
}

#[test]
fn corrupt_checkpoint_is_a_format_error() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.ckpt");
    std::fs::write(&path, b"NESSMPS\0garbage").unwrap();
    assert!(matches!(Solver::resume(&path), Err(Error::Format(_))));
    assert!(matches!(
        Solver::resume(&dir.path().join("missing")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn warm_start_skips_annealing_and_respects_bounds() {
    let spec = ModelSpec::ising(4, 0.6, 1.0, 0.0, 0.7).unwrap();
    let sched = SweepSchedule {
        d_start: 4,
        d_max: 8,
        ..Default::default()
    };
    let (state, _) = run(&spec, &sched).unwrap();
    let narrow = SweepSchedule {
        d_start: 2,
        d_max: 4,
        max_sweeps: 3,
        ..Default::default()
    };
    let solver = Solver::warm_start(&spec.with_gamma(0.8), &narrow, &state).unwrap();
    assert_eq!(solver.phase(), Phase::Refinement);
    assert!(solver.state().max_bond() <= 4);
    let (_, report) = solver.run().unwrap();
    assert!(report
        .records
        .iter()
        .all(|r| r.gamma == 0.8 && r.phase == Phase::Refinement));
    let other = ModelSpec::ising(5, 0.6, 1.0, 0.0, 0.7).unwrap();
    assert!(Solver::warm_start(&other, &sched, &state).is_err());
}

#[test]
fn schedule_validation_reports_every_problem() {
    let bad = SweepSchedule {
        d_start: 0,
        gamma_decay: 1.5,
        residual_tol: -1.0,
        ..Default::default()
    };
    match bad.validate() {
        Err(Error::Config(p)) => assert!(p.len() >= 3, "{p:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn truncated_hermitian_basis_runs_stay_exactly_hermitian() {
    let spec = ModelSpec::ising(5, 1.0, 1.0, 0.5, 0.7).unwrap();
    let base = SweepSchedule {
        d_start: 4,
        d_max: 6,
        max_sweeps: 8,
        ..Default::default()
    };
    let defect = |hermitian_basis: bool| {
        let (state, _) = run(
            &spec,
            &SweepSchedule {
                hermitian_basis,
                ..base.clone()
            },
        )
        .unwrap();
        let rho = crate::model::interleaved_to_density(&state.reconstruct_dense().unwrap(), 5, 2)
            .unwrap();
        rho.max_abs_diff(&rho.adjoint()) / rho.max_abs()
    };
    assert!(defect(true) < 1e-14);
    assert!(defect(false) > 1e-10);
}

#[test]
fn both_bases_reach_the_same_steady_state() {
    let spec = ModelSpec::ising(4, -0.7, 1.0, 0.3, 1.1).unwrap();
    let rho = null_vector(&spec);
    for hermitian_basis in [true, false] {
        let (state, report) = run(
            &spec,
            &SweepSchedule {
                hermitian_basis,
                ..exact_schedule(4)
            },
        )
        .unwrap();
        assert_eq!(report.status, Status::Converged);
        let z = expectation(&state, &pauli(Pauli::Z), 2).unwrap();
        assert_abs_diff_eq!(
            z.re,
            dense_observable(&rho, &pauli(Pauli::Z), &[2]).unwrap().re,
            epsilon = 1e-8
        );
    }
}
