//! Acceptance suite: one test per exit criterion, each printing a PASS line
//! with the measured quantities. Run with
//! `cargo test -p afn-bench --test acceptance -- --nocapture` to see them.

use afn_bench::data::gen_synthetic;
use afn_bench::sweep::{random_rhs, SystemOp};
use afn_precond::adaptive::estimate_rank;
use afn_precond::geometry::{
    brute_force_optimal_fill, brute_force_optimal_separation, fill_distance, fps_sample,
    separation_distance, uniform_sample, PointSet,
};
use afn_precond::kernel::{assemble_block, assemble_full, KernelSpec};
use afn_precond::linalg::{cholesky, pcg, spd_solve, sym_eig, sym_eigenvalues, FnOp, JitterPolicy};
use afn_precond::mat::{norm2, Mat};
use afn_precond::precond::{
    apply_afn_inv, apply_fsai_inv, build_afn, build_afn_with, build_fsai, build_fsai_plain,
    build_nystrom, nystrom_error_curve, nystrom_error_rel, schur_complement_dense, AfnOptions,
    DenseSpdOracle,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_points(seed: u64, n: usize, d: usize, edge: f64) -> PointSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>() * edge).collect();
    PointSet::new(coords, d).unwrap()
}

/// Criterion 1: with a dense FSAI pattern the AFN preconditioner equals
/// `K + mu I` exactly, so PCG converges to 1e-10 in at most 2 iterations.
#[test]
fn criterion_01_afn_exactness() {
    let n = 200;
    let ps = gen_synthetic(n, 3, (n as f64).powf(1.0 / 3.0), 0).unwrap();
    let spec = KernelSpec::gaussian(50.0f64.sqrt(), 1e-4).unwrap();
    let f = build_afn(&spec, &ps, 40, n - 40).unwrap();
    assert_eq!(f.jitter(), 0.0, "exactness requires an unjittered factor");

    let op = SystemOp::new(&spec, &ps, 2048);
    let b = random_rhs(n, 0);
    let minv = FnOp::new(n, |r: &[f64], y: &mut [f64]| {
        y.copy_from_slice(&apply_afn_inv(&f, r))
    });
    let (_, rep) = pcg(&op, &b, Some(&minv), 1e-10, 10).unwrap();
    assert!(rep.converged, "history {:?}", rep.rel_residual_history);
    assert!(rep.iterations <= 2, "took {} iterations", rep.iterations);
    println!(
        "[acceptance] criterion 1 (AFN exactness): PASS - {} iteration(s), relres {:.2e}",
        rep.iterations,
        rep.final_relative_residual()
    );
}

/// Criterion 2: the SMW closed form applied to a vector matches the direct
/// dense inverse within 1e-8 relative on 50 random instances.
#[test]
fn criterion_02_smw_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let n = rng.gen_range(20..=60);
        let k = rng.gen_range(2..=6);
        let ps = random_points(2000 + trial, n, 2, 4.0);
        let mu = 0.1;
        let spec = KernelSpec::gaussian(1.0, mu).unwrap();
        let sel = fps_sample(&ps, k, ps.centroid_seed()).unwrap();

        let w = assemble_block(&spec, &ps, &sel.indices, &sel.indices)
            .unwrap()
            .values;
        let all: Vec<usize> = (0..n).collect();
        let c = assemble_block(&spec, &ps, &all, &sel.indices)
            .unwrap()
            .values;

        let (lam, v) = sym_eig(&w).unwrap();
        let mut u_ext = c.matmul(&v);
        for i in 0..n {
            for (j, l) in lam.iter().enumerate() {
                u_ext[(i, j)] /= l;
            }
        }

        let r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();

        let ut_r = u_ext.matvec_t(&r);
        let mut inner = u_ext.transpose().matmul(&u_ext);
        for (j, l) in lam.iter().enumerate() {
            inner[(j, j)] += mu / l;
        }
        let inner_chol = cholesky(&inner, &JitterPolicy::default()).unwrap();
        let back = u_ext.matvec(&spd_solve(&inner_chol, &ut_r));
        let smw: Vec<f64> = r
            .iter()
            .zip(&back)
            .map(|(ri, bi)| ri / mu - bi / mu)
            .collect();

        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (cidx, l) in lam.iter().enumerate() {
                    s += u_ext[(i, cidx)] * l * u_ext[(j, cidx)];
                }
                m[(i, j)] = s + if i == j { mu } else { 0.0 };
            }
        }
        let direct = spd_solve(&cholesky(&m, &JitterPolicy::default()).unwrap(), &r);

        let mut diff = 0.0;
        for (a, b) in smw.iter().zip(&direct) {
            diff += (a - b) * (a - b);
        }
        let rel = diff.sqrt() / norm2(&direct);
        worst = worst.max(rel);
        assert!(rel <= 1e-8, "trial {trial}: relative error {rel}");
    }
    println!("[acceptance] criterion 2 (SMW oracle): PASS - worst relative error {worst:.2e} over 50 instances");
}

/// Criterion 3: FPS theory suite. h <= q always; against the brute-force
/// oracles, h_FPS <= 2 h* + 1e-12 and q_FPS >= q*/2 - 1e-12.
#[test]
fn criterion_03_fps_theory() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);

    // 120 oracle-backed instances at n <= 12
    for trial in 0..120 {
        let n = rng.gen_range(4..=12);
        let d = rng.gen_range(1..=3);
        let k = rng.gen_range(2..=5.min(n));
        let ps = random_points(3000 + trial, n, d, 1.0);
        let seed = rng.gen_range(0..n);
        let sel = fps_sample(&ps, k, seed).unwrap();
        let h = fill_distance(&ps, &sel).unwrap();
        let q = separation_distance(&ps, &sel).unwrap();
        assert!(h <= q + 1e-12, "trial {trial}: h = {h} > q = {q}");
        let (_, h_star) = brute_force_optimal_fill(&ps, k).unwrap();
        let (_, q_star) = brute_force_optimal_separation(&ps, k).unwrap();
        assert!(
            h <= 2.0 * h_star + 1e-12,
            "trial {trial}: h = {h}, h* = {h_star}"
        );
        assert!(
            q >= 0.5 * q_star - 1e-12,
            "trial {trial}: q = {q}, q* = {q_star}"
        );
    }

    // 80 larger instances, h <= q only
    for trial in 0..80 {
        let n = rng.gen_range(2..=1500);
        let d = rng.gen_range(1..=3);
        let k = rng.gen_range(2..=64.min(n)).max(2.min(n));
        let ps = random_points(4000 + trial, n, d, 10.0);
        let seed = rng.gen_range(0..n);
        let sel = fps_sample(&ps, k.min(n), seed).unwrap();
        if sel.k() < 2 {
            continue;
        }
        let h = fill_distance(&ps, &sel).unwrap();
        let q = separation_distance(&ps, &sel).unwrap();
        assert!(
            h <= q + 1e-12 * q.max(1.0),
            "trial {trial}: h = {h} > q = {q} (n = {n}, k = {k})"
        );
    }
    println!("[acceptance] criterion 3 (FPS theory suite): PASS - 200 instances");
}

/// Criterion 4: volume bounds in the unit ball, h >= k^(-1/d) and
/// q <= 2^((d+1)/d) k^(-1/d), on 100 random subsets with k << n.
#[test]
fn criterion_04_unit_ball_bounds() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut checked = 0;
    for d in [2usize, 3] {
        let n = 1500;
        let mut coords = Vec::with_capacity(n * d);
        while coords.len() < n * d {
            let p: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                coords.extend_from_slice(&p);
            }
        }
        let ps = PointSet::new(coords, d).unwrap();
        for _ in 0..50 {
            let k = rng.gen_range(2..=25usize);
            let sel = uniform_sample(&ps, k, rng.gen()).unwrap();
            let h = fill_distance(&ps, &sel).unwrap();
            let q = separation_distance(&ps, &sel).unwrap();
            let kf = (k as f64).powf(-1.0 / d as f64);
            assert!(h >= kf, "h = {h} < k^(-1/d) = {kf} (d = {d}, k = {k})");
            let c_prime = 2.0f64.powf((d as f64 + 1.0) / d as f64);
            assert!(q <= c_prime * kf, "q = {q} > {}", c_prime * kf);
            checked += 1;
        }
    }
    println!("[acceptance] criterion 4 (unit-ball bounds): PASS - {checked} subsets");
}

/// Criterion 5: the Nystrom approximation reproduces the landmark block row
/// and column of K within 1e-10, and K - K_nys stays PSD up to -1e-8 ||K||.
#[test]
fn criterion_05_nystrom_structure() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst_entry: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    for trial in 0..50 {
        let n = rng.gen_range(40..=100);
        let k = rng.gen_range(4..=12);
        let ps = random_points(5000 + trial, n, 2, 10.0);
        let spec = KernelSpec::gaussian(2.0, 1e-4).unwrap();
        let sel = fps_sample(&ps, k, ps.centroid_seed()).unwrap();
        let p = build_nystrom(&spec, &ps, &sel).unwrap();

        let kmat = assemble_full(&spec, &ps);
        let evals_k = sym_eigenvalues(&kmat).unwrap();
        let knorm = evals_k[0].abs().max(evals_k.last().unwrap().abs());

        let u = p.basis();
        let mut resid = kmat.clone();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (c, w) in p.eigenvalues().iter().enumerate() {
                    s += u[(i, c)] * w * u[(j, c)];
                }
                resid[(i, j)] -= s;
            }
        }
        for &a in &sel.indices {
            for j in 0..n {
                let e = resid[(a, j)].abs().max(resid[(j, a)].abs());
                worst_entry = worst_entry.max(e);
                assert!(e <= 1e-10, "trial {trial}: landmark block entry {e:.2e}");
            }
        }
        let evals_r = sym_eigenvalues(&resid).unwrap();
        let min_e = *evals_r.last().unwrap();
        worst_eig = worst_eig.min(min_e / knorm);
        assert!(
            min_e >= -1e-8 * knorm,
            "trial {trial}: min residual eigenvalue {min_e}, ||K|| = {knorm}"
        );
    }
    println!(
        "[acceptance] criterion 5 (Nystrom structure): PASS - worst block entry {worst_entry:.2e}, worst lambda_min/||K|| {worst_eig:.2e}"
    );
}

/// Criterion 6: unpreconditioned CG iteration counts over a log-spaced l^2
/// grid peak strictly inside the grid, at >= 2x both endpoints.
#[test]
fn criterion_06_iteration_profile_shape() {
    let n = 1000;
    let ps = gen_synthetic(n, 3, 10.0, 0).unwrap();
    let grid = 15;
    let mut iters = Vec::with_capacity(grid);
    for i in 0..grid {
        let l2 = 0.1 * (1000.0f64 / 0.1).powf(i as f64 / (grid - 1) as f64);
        let spec = KernelSpec::gaussian(l2.sqrt(), 1e-4).unwrap();
        let op = SystemOp::new(&spec, &ps, 2048);
        let b = random_rhs(n, 0);
        let (_, rep) = pcg(&op, &b, None, 1e-4, 500).unwrap();
        iters.push(rep.iterations);
    }
    let max = *iters.iter().max().unwrap();
    let first = iters[0];
    let last = *iters.last().unwrap();
    assert!(
        first < max && last < max,
        "max must be strictly interior: {iters:?}"
    );
    assert!(
        max >= 2 * first && max >= 2 * last,
        "peak {max} must be >= 2x endpoints {first}, {last}: {iters:?}"
    );
    println!("[acceptance] criterion 6 (iteration profile): PASS - counts {iters:?}");
}

/// Criterion 7: at middle length-scales, AFN either cuts the CG iteration
/// count to a third or converges where CG exhausts its 500 iterations.
#[test]
fn criterion_07_preconditioning_gain() {
    let n = 4000;
    let ps = gen_synthetic(n, 3, (n as f64).powf(1.0 / 3.0), 0).unwrap();
    let mut summary = Vec::new();
    for l2 in [25.0f64, 45.0, 65.0] {
        let spec = KernelSpec::gaussian(l2.sqrt(), 1e-4).unwrap();
        let op = SystemOp::new(&spec, &ps, 2048);
        let b = random_rhs(n, 0);

        let (_, cg) = pcg(&op, &b, None, 1e-4, 500).unwrap();

        let est = estimate_rank(&spec, &ps, 100, 0).unwrap();
        let k = est.k_hat.min(2000).min(n - 1).max(1);
        let f = build_afn_with(
            &spec,
            &ps,
            k,
            100,
            &AfnOptions {
                rng_seed: 0,
                ..AfnOptions::default()
            },
        )
        .unwrap();
        let minv = FnOp::new(n, |r: &[f64], y: &mut [f64]| {
            y.copy_from_slice(&apply_afn_inv(&f, r))
        });
        let (_, afn) = pcg(&op, &b, Some(&minv), 1e-4, 500).unwrap();

        assert!(afn.converged, "l2 = {l2}: AFN failed to converge");
        let cg_failed = !cg.converged && cg.iterations >= 500;
        assert!(
            cg_failed || 3 * afn.iterations <= cg.iterations,
            "l2 = {l2}: AFN {} vs CG {} ({})",
            afn.iterations,
            cg.iterations,
            cg.converged
        );
        summary.push((l2, k, afn.iterations, cg.iterations, cg.converged));
    }
    println!("[acceptance] criterion 7 (preconditioning gain): PASS - (l2, k, afn, cg, cg_conv) = {summary:?}");
}

/// Criterion 8: across mu in {1e-2, 1e-4, 1e-6} on a fixed Matern-3/2
/// instance, AFN iteration counts vary by at most 2x while plain FSAI grows
/// monotonically by at least 3x (or fails).
#[test]
fn criterion_08_mu_robustness() {
    let n = 2000;
    let ps = gen_synthetic(n, 3, (n as f64).powf(1.0 / 3.0), 0).unwrap();
    let l = 20.0;
    let (k, w) = (300, 8);

    let mut afn_iters = Vec::new();
    let mut fsai_iters = Vec::new();
    let mut fsai_failed = false;
    for mu in [1e-2, 1e-4, 1e-6] {
        let spec = KernelSpec::matern32(l, mu).unwrap();
        let op = SystemOp::new(&spec, &ps, 2048);
        let b = random_rhs(n, 0);

        let f = build_afn_with(
            &spec,
            &ps,
            k,
            w,
            &AfnOptions {
                rng_seed: 0,
                ..AfnOptions::default()
            },
        )
        .unwrap();
        let afn_op = FnOp::new(n, |r: &[f64], y: &mut [f64]| {
            y.copy_from_slice(&apply_afn_inv(&f, r))
        });
        let (_, afn) = pcg(&op, &b, Some(&afn_op), 1e-4, 500).unwrap();
        assert!(afn.converged, "mu = {mu}: AFN failed");
        afn_iters.push(afn.iterations);

        let g = build_fsai_plain(&spec, &ps, w).unwrap();
        let g_op = FnOp::new(n, |r: &[f64], y: &mut [f64]| {
            y.copy_from_slice(&apply_fsai_inv(&g, r))
        });
        let (_, fsai) = pcg(&op, &b, Some(&g_op), 1e-4, 500).unwrap();
        fsai_failed |= !fsai.converged;
        fsai_iters.push(fsai.iterations);
    }

    let afn_max = *afn_iters.iter().max().unwrap();
    let afn_min = *afn_iters.iter().min().unwrap();
    assert!(
        afn_max <= 2 * afn_min,
        "AFN iterations vary too much: {afn_iters:?}"
    );
    let fsai_monotone = fsai_iters.windows(2).all(|w| w[1] >= w[0]);
    let fsai_grew = fsai_iters[2] >= 3 * fsai_iters[0];
    assert!(
        fsai_failed || (fsai_monotone && fsai_grew),
        "FSAI must degrade with mu: {fsai_iters:?} (failed: {fsai_failed})"
    );
    println!(
        "[acceptance] criterion 8 (mu robustness): PASS - AFN {afn_iters:?}, FSAI {fsai_iters:?} (failed: {fsai_failed})"
    );
}

/// Criterion 9: the subsample error curve's 0.1-crossing rank, rescaled by
/// n/m, matches the full-matrix crossing (on its multiples-of-10 grid)
/// within a factor 2 for at least 4 of 5 seeds.
#[test]
fn criterion_09_rank_estimation_consistency() {
    let n = 1000;
    let m = 100;
    let ps = gen_synthetic(n, 3, 10.0, 0).unwrap();
    for l in [5.0, 10.0] {
        let spec = KernelSpec::gaussian(l, 1e-4).unwrap();
        let sel = fps_sample(&ps, n, ps.centroid_seed()).unwrap();
        let ranks: Vec<usize> = (10..=n).step_by(10).collect();
        let curve = nystrom_error_curve(&spec, &ps, &sel.indices, &ranks, Some(0.1)).unwrap();
        let full_cross = curve
            .iter()
            .find(|&&(_, e)| e < 0.1)
            .map(|&(r, _)| r)
            .expect("full curve must cross 0.1");

        let mut hits = 0;
        let mut detail = Vec::new();
        for seed in 0..5u64 {
            let est = estimate_rank(&spec, &ps, m, seed).unwrap();
            let scaled = est.r_subsample * (n / m);
            let ratio = (scaled as f64 / full_cross as f64).max(full_cross as f64 / scaled as f64);
            if ratio <= 2.0 + 1e-12 {
                hits += 1;
            }
            detail.push((seed, scaled, ratio));
        }
        assert!(
            hits >= 4,
            "l = {l}: only {hits}/5 seeds within factor 2 of {full_cross}: {detail:?}"
        );
        println!(
            "[acceptance] criterion 9 (rank estimation, l = {l}): PASS - full crossing {full_cross}, (seed, scaled, ratio) = {detail:?}"
        );
    }
}

/// Criterion 10: screening effect. With 1000 uniform points in a cube of
/// edge 10 (Gaussian l = 5, mu = 1e-4, 100 FPS landmarks), the Schur
/// complement has a strictly larger fraction of entries below 1e-10
/// (shared max-entry scale) than K22 + mu I, and the count of eigenvalues
/// of K above 1.1 mu stays within [150, 350] across 5 seeds.
#[test]
fn criterion_10_screening_histogram() {
    let n = 1000;
    let mu = 1e-4;
    let mut counts = Vec::new();
    for seed in 0..5u64 {
        let ps = random_points(seed, n, 3, 10.0);
        let spec = KernelSpec::gaussian(5.0, mu).unwrap();
        let sel = fps_sample(&ps, 100, ps.centroid_seed()).unwrap();

        let (schur, rest) = schur_complement_dense(&spec, &ps, &sel.indices).unwrap();
        let mut k22 = assemble_block(&spec, &ps, &rest, &rest).unwrap().values;
        k22.add_diagonal(mu);

        let max = schur.max_abs().max(k22.max_abs());
        let frac = |m: &Mat| {
            m.data().iter().filter(|v| v.abs() / max < 1e-10).count() as f64 / m.data().len() as f64
        };
        let (f_s, f_k) = (frac(&schur), frac(&k22));
        assert!(
            f_s > f_k,
            "seed {seed}: schur fraction {f_s} must exceed {f_k}"
        );

        let evals = sym_eigenvalues(&assemble_full(&spec, &ps)).unwrap();
        let count = evals.iter().filter(|&&v| v > 1.1 * mu).count();
        assert!(
            (150..=350).contains(&count),
            "seed {seed}: eigencount {count} outside [150, 350]"
        );
        counts.push(count);
    }
    println!("[acceptance] criterion 10 (screening histogram): PASS - eigencounts {counts:?}");
}

/// Criterion 11: dense-pattern FSAI satisfies ||G S G' - I||_F <= 1e-8 sqrt(m)
/// and the diagonal pattern reproduces 1/sqrt(S_ii).
#[test]
fn criterion_11_fsai_correctness() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for trial in 0..5 {
        let m = rng.gen_range(80..=150);
        let mut b = Mat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                b[(i, j)] = rng.gen::<f64>() - 0.5;
            }
        }
        let bt = b.transpose();
        let mut s = b.matmul(&bt);
        s.add_diagonal(0.5);

        // dense pattern via a 1-D identity ordering
        let line = PointSet::new((0..m).map(|i| i as f64).collect(), 1).unwrap();
        let ids: Vec<usize> = (0..m).collect();
        let dense_pattern = afn_precond::geometry::knn_pattern(&line, &ids, m).unwrap();
        let oracle = DenseSpdOracle { mat: &s };
        let g = build_fsai(&oracle, &dense_pattern).unwrap();
        let gd = g.to_dense();
        let gsg = gd.matmul(&s).matmul(&gd.transpose());
        let mut frob = 0.0;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                frob += (gsg[(i, j)] - target) * (gsg[(i, j)] - target);
            }
        }
        let defect = frob.sqrt();
        worst = worst.max(defect / (m as f64).sqrt());
        assert!(
            defect <= 1e-8 * (m as f64).sqrt(),
            "trial {trial}: ||GSG' - I||_F = {defect}"
        );

        // diagonal pattern: exact elementwise inverse square roots
        let diag_pattern = afn_precond::geometry::knn_pattern(&line, &ids, 1).unwrap();
        let g1 = build_fsai(&oracle, &diag_pattern).unwrap();
        for i in 0..m {
            let (_, vals) = g1.row(i);
            let expect = 1.0 / s[(i, i)].sqrt();
            assert!(
                (vals[0] - expect).abs() <= 1e-15 * expect,
                "diag entry {i}: {} vs {expect}",
                vals[0]
            );
        }
    }
    println!(
        "[acceptance] criterion 11 (FSAI correctness): PASS - worst scaled defect {worst:.2e}"
    );
}

/// Criterion 12: FPS landmarks give a median relative Nystrom error no
/// larger than uniform random landmarks at every tested rank.
#[test]
fn criterion_12_fps_vs_random_landmarks() {
    let n = 1000;
    let ps = gen_synthetic(n, 3, 10.0, 0).unwrap();
    let spec = KernelSpec::gaussian(10.0, 1e-4).unwrap();
    let mut detail = Vec::new();
    for k in [50usize, 100, 200] {
        let fps = fps_sample(&ps, k, ps.centroid_seed()).unwrap();
        let e_fps = nystrom_error_rel(&spec, &ps, &fps).unwrap();
        let mut rand_errs: Vec<f64> = (0..10u64)
            .map(|s| {
                let sel = uniform_sample(&ps, k, s).unwrap();
                nystrom_error_rel(&spec, &ps, &sel).unwrap()
            })
            .collect();
        rand_errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med_rand = 0.5 * (rand_errs[4] + rand_errs[5]);
        assert!(
            e_fps <= med_rand,
            "k = {k}: FPS error {e_fps:.3e} vs random median {med_rand:.3e}"
        );
        detail.push((k, e_fps, med_rand));
    }
    println!("[acceptance] criterion 12 (FPS vs random): PASS - (k, fps, med_random) = {detail:?}");
}
