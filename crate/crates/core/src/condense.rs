//! Condensed receding-horizon QP construction: the state sequence is
//! eliminated through the discrete dynamics so only the inputs remain as
//! decision variables. Input widths may vary per step (the locomotion MPC
//! drops swing-foot columns structurally).

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

/// One discrete prediction step `x+ = a x + b u + c`.
pub struct StepModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
}

/// Quadratic tracking data for the horizon.
pub struct CondenseInput<'a> {
    pub steps: &'a [StepModel],
    /// Diagonal state weight, length = state dim.
    pub q_diag: &'a DVector<f64>,
    /// Diagonal input weight per step, length = that step's input dim.
    pub r_diag: &'a [DVector<f64>],
    /// Input reference per step (the cost centers `u` here), same layout.
    pub u_ref: &'a [DVector<f64>],
    pub x0: &'a DVector<f64>,
    /// State references for steps 1..=N.
    pub x_ref: &'a [DVector<f64>],
}

/// Cost matrices for `1/2 u' P u + q' u` over the stacked input vector.
pub struct CondensedCost {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    /// Column offset of each step's input block in the stacked vector.
    pub offsets: Vec<usize>,
    pub total_inputs: usize,
}

pub fn condense(input: &CondenseInput<'_>) -> CondensedCost {
    let n_steps = input.steps.len();
    assert_eq!(input.x_ref.len(), n_steps);
    assert_eq!(input.r_diag.len(), n_steps);
    assert_eq!(input.u_ref.len(), n_steps);
    let nx = input.x0.len();

    let mut offsets = Vec::with_capacity(n_steps);
    let mut total = 0usize;
    for step in input.steps {
        offsets.push(total);
        total += step.b.ncols();
    }

    let mut p = DMatrix::zeros(total, total);
    let mut q = DVector::zeros(total);

    // sensitivity blocks d x_{i+1} / d u_j for j <= i, updated in place as
    // the horizon unrolls, plus the input-free state response
    let mut blocks: Vec<DMatrix<f64>> = Vec::with_capacity(n_steps);
    let mut x_free = input.x0.clone();

    for (i, step) in input.steps.iter().enumerate() {
        for blk in blocks.iter_mut() {
            *blk = &step.a * &*blk;
        }
        blocks.push(step.b.clone());
        x_free = &step.a * x_free + &step.c;

        // error = x_free + sum_j blocks[j] u_j - x_ref[i]
        let err = &x_free - &input.x_ref[i];
        for (j, bj) in blocks.iter().enumerate() {
            // q += 2 B_j' Q err ; P += 2 B_j' Q B_l
            let mut wq = bj.clone();
            for r in 0..nx {
                wq.row_mut(r).scale_mut(input.q_diag[r]);
            }
            let qt = bj.transpose() * &{
                let mut e = err.clone();
                for r in 0..nx {
                    e[r] *= input.q_diag[r];
                }
                e
            };
            let oj = offsets[j];
            for (r, v) in qt.iter().enumerate() {
                q[oj + r] += 2.0 * v;
            }
            for (l, bl) in blocks.iter().enumerate().take(j + 1) {
                let pb = bj.transpose() * {
                    let mut w = bl.clone();
                    for r in 0..nx {
                        w.row_mut(r).scale_mut(input.q_diag[r]);
                    }
                    w
                };
                let ol = offsets[l];
                for r in 0..pb.nrows() {
                    for c in 0..pb.ncols() {
                        p[(oj + r, ol + c)] += 2.0 * pb[(r, c)];
                        if l != j {
                            p[(ol + c, oj + r)] += 2.0 * pb[(r, c)];
                        }
                    }
                }
            }
        }
    }

    // input penalty centered on u_ref
    for (i, (r, ur)) in input.r_diag.iter().zip(input.u_ref).enumerate() {
        let o = offsets[i];
        for j in 0..r.len() {
            p[(o + j, o + j)] += 2.0 * r[j];
            q[o + j] -= 2.0 * r[j] * ur[j];
        }
    }

    CondensedCost { p, q, offsets, total_inputs: total }
}

/// Rescale the cost so the Hessian diagonal averages to one. The argmin is
/// invariant under positive cost scaling, and a unit-scale Hessian keeps the
/// solver's fixed 1e-9 diagonal regularization negligible regardless of how
/// small the configured weights are.
pub fn normalize_cost(cost: &mut CondensedCost) {
    let n = cost.total_inputs;
    if n == 0 {
        return;
    }
    let mean: f64 = (0..n).map(|i| cost.p[(i, i)].abs()).sum::<f64>() / n as f64;
    if mean > 1e-300 {
        let s = 1.0 / mean;
        cost.p *= s;
        cost.q *= s;
    }
}

/// Horizon cost of an explicit input sequence, for oracle-style checks:
/// `sum_i (x_i - x_ref_i)' Q (x_i - x_ref_i) + (u_i - u_ref_i)' R (u_i - u_ref_i)`.
#[cfg(test)]
pub fn horizon_cost(input: &CondenseInput<'_>, u: &[DVector<f64>]) -> f64 {
    assert_eq!(u.len(), input.steps.len());
    let mut x = input.x0.clone();
    let mut cost = 0.0;
    for (i, step) in input.steps.iter().enumerate() {
        x = &step.a * x + &step.b * &u[i] + &step.c;
        let e = &x - &input.x_ref[i];
        for r in 0..e.len() {
            cost += input.q_diag[r] * e[r] * e[r];
        }
        let du = &u[i] - &input.u_ref[i];
        for r in 0..du.len() {
            cost += input.r_diag[i][r] * du[r] * du[r];
        }
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    /// The condensed quadratic must reproduce the rolled-out horizon cost for
    /// arbitrary input sequences (up to the u-independent constant).
    #[test]
    fn condensed_cost_matches_rollout() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
        let c = DVector::from_vec(vec![0.0, -0.02]);
        let steps: Vec<StepModel> = (0..3)
            .map(|_| StepModel { a: a.clone(), b: b.clone(), c: c.clone() })
            .collect();
        let q_diag = DVector::from_vec(vec![4.0, 1.0]);
        let r_diag = vec![DVector::from_vec(vec![0.5]); 3];
        let u_ref = vec![DVector::from_vec(vec![0.2]); 3];
        let x0 = DVector::from_vec(vec![0.3, -0.1]);
        let x_ref = vec![DVector::from_vec(vec![1.0, 0.5]); 3];
        let input = CondenseInput {
            steps: &steps,
            q_diag: &q_diag,
            r_diag: &r_diag,
            u_ref: &u_ref,
            x0: &x0,
            x_ref: &x_ref,
        };
        let cost = condense(&input);

        let eval = |u: &[DVector<f64>]| {
            let stacked = DVector::from_iterator(3, u.iter().map(|v| v[0]));
            0.5 * (&cost.p * &stacked).dot(&stacked) + cost.q.dot(&stacked)
        };
        let zero = vec![DVector::zeros(1); 3];
        let constant = horizon_cost(&input, &zero);

        for trial in [[0.0, 0.0, 0.0], [1.0, -2.0, 0.5], [0.3, 0.3, 0.3]] {
            let u: Vec<DVector<f64>> =
                trial.iter().map(|&v| DVector::from_vec(vec![v])).collect();
            assert_relative_eq!(
                eval(&u) + constant,
                horizon_cost(&input, &u),
                epsilon = 1e-10,
                max_relative = 1e-10
            );
        }
    }
}
