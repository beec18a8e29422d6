//! The rank-1 relation between the right-multiplied solver's iterate and its
//! mean estimate of `A⁻¹`.

use problin::linalg::matrix::{axpy, max_abs, max_abs_diff, sub_vec};
use problin::linalg::random::{random_spd, seeded_rng, standard_normal_vec};
use problin::mbi::{mbi_cg_solve, MbiCgPrior};

fn worst_gaps() -> (f64, f64) {
    let mut rng = seeded_rng(1006);
    let d = 10;
    let (mut literal_w, mut corrected_w) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let a = random_spd(d, 1.0, 10.0, &mut rng);
        let b = standard_normal_vec(d, &mut rng);
        for (al, be, ga) in [(1.0, 1.0, 0.0), (2.0, 0.0, 1.0), (0.5, 1.0, 1.0)] {
            let prior = MbiCgPrior::validation(al, be, ga);
            let x0: Vec<f64> = b.iter().map(|v| al * v).collect();
            let r0 = sub_vec(&b, &a.matvec(&x0));
            for m in 1..d {
                let run = mbi_cg_solve(&a, &b, prior, m).unwrap();
                if run.trace.iterations() < m {
                    break;
                }
                let xm = run.trace.final_x().unwrap();
                let scale = max_abs(xm).max(1.0);
                let hm_r0 = run.posterior.mean().matvec(&r0);

                let mut literal = hm_r0.clone();
                axpy(-1.0, &x0, &mut literal);
                axpy(-(1.0 - run.step_sizes[m - 1]), &run.directions()[m - 1], &mut literal);
                literal_w = literal_w.max(max_abs_diff(xm, &literal) / scale);

                let mut corrected = hm_r0;
                axpy(1.0, &x0, &mut corrected);
                axpy(-1.0, &run.next_direction(), &mut corrected);
                corrected_w = corrected_w.max(max_abs_diff(xm, &corrected) / scale);
            }
        }
    }
    (literal_w, corrected_w)
}

#[test]
fn corrected_rank_one_relation() {
    let (_, corrected) = worst_gaps();
    assert!(corrected <= 1e-10, "gap {corrected:e}");
}

/// `x_m = A_m⁻¹(b − Ax₀) − x₀ − (1 − α_m)d_m` as commonly quoted. It is
/// inconsistent with `A_m⁻¹y_i = s_i` and fails; run with `--ignored`.
#[test]
#[ignore = "relation as quoted does not hold; see corrected_rank_one_relation"]
fn literal_rank_one_relation() {
    let (literal, _) = worst_gaps();
    assert!(literal <= 1e-7, "gap {literal:e}");
}
