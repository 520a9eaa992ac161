//! Tanh-sinh (double-exponential) quadrature at arbitrary precision.
//!
//! The substitution `x = c + h_len * tanh((pi/2) sinh t)` maps the finite
//! interval onto the real line and makes the transformed integrand decay
//! doubly exponentially, so the trapezoid rule in `t` converges at a
//! near-exponential rate for analytic integrands.  Each refinement level
//! halves the step and reuses all previous evaluations.

use crate::real::{Ctx, Real};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuadratureError {
    #[error("quadrature did not converge to the requested tolerance")]
    NoConvergence,
}

struct Node {
    /// offset of the abscissa from the nearer endpoint
    offset: Real,
    /// whether the node sits in the right half of the interval
    right: bool,
    weight: Real,
}

/// Nodes at `t = j*h` for odd `j` (all `j` when `first` is set), expressed
/// endpoint-relatively to avoid cancellation near the boundary.
fn level_nodes(ctx: &Ctx, h_num: i64, h_den: i64, first: bool, len: &Real) -> Vec<Node> {
    let mut nodes = Vec::new();
    let half_pi = {
        let pi = ctx.pi();
        ctx.div(&pi, &ctx.from_i64(2))
    };
    let h = ctx.div(&ctx.from_i64(h_num), &ctx.from_i64(h_den));
    // Margin for integrable endpoint singularities as strong as x^{-1/2+eps}:
    // the tail is cut where the weight alone underflows twice the target, so
    // that weight * f still underflows it.
    let cutoff = ctx.pow2(-2 * (ctx.prec() as i64) - 16);
    let mut j: i64 = if first { 0 } else { 1 };
    let step = if first { 1 } else { 2 };
    loop {
        let t = ctx.mul(&h, &ctx.from_i64(j));
        // sinh and cosh via exp
        let et = ctx.exp(&t);
        let emt = ctx.recip(&et);
        let two = ctx.from_i64(2);
        let sinh = ctx.div(&ctx.sub(&et, &emt), &two);
        let cosh = ctx.div(&ctx.add(&et, &emt), &two);
        let y = ctx.mul(&half_pi, &sinh); // inner argument
                                          // 1 - tanh(y) = 2 e^{-2y} / (1 + e^{-2y}); offset = len * (1 - tanh y)
        let e2my = ctx.exp(&ctx.mul(&ctx.from_i64(-2), &y));
        let denom = ctx.add(&ctx.one(), &e2my);
        let one_minus_tanh = ctx.div(&ctx.mul(&two, &e2my), &denom);
        let offset = ctx.mul(len, &one_minus_tanh);
        // weight = len * h * (pi/2) cosh t * sech^2 y
        //        = len * h * (pi/2) cosh t * 4 e^{-2y} / (1 + e^{-2y})^2
        let sech2 = ctx.div(&ctx.mul(&ctx.from_i64(4), &e2my), &ctx.mul(&denom, &denom));
        let weight = ctx.mul(
            len,
            &ctx.mul(&h, &ctx.mul(&half_pi, &ctx.mul(&cosh, &sech2))),
        );
        let done = j > 0 && ctx.lt(&weight.abs(), &cutoff);
        if j == 0 {
            nodes.push(Node {
                offset: ctx.mul(len, &ctx.one()),
                right: false,
                weight,
            });
        } else {
            nodes.push(Node {
                offset: offset.clone(),
                right: true,
                weight: weight.clone(),
            });
            nodes.push(Node {
                offset,
                right: false,
                weight,
            });
        }
        if done {
            break;
        }
        j += step;
        if j > 400_000 {
            break;
        }
    }
    nodes
}

/// Integrates `f` over `[a, b]` to roughly `target_bits` relative accuracy.
pub fn tanh_sinh<F>(
    ctx: &Ctx,
    mut f: F,
    a: &Real,
    b: &Real,
    target_bits: u32,
) -> Result<Real, QuadratureError>
where
    F: FnMut(&Ctx, &Real) -> Real,
{
    let two = ctx.from_i64(2);
    let len = ctx.div(&ctx.sub(b, a), &two); // half-length
    let mut eval_at = |ctx: &Ctx, node: &Node| -> Real {
        // abscissa measured from the nearer endpoint
        let x = if node.right {
            ctx.sub(b, &node.offset)
        } else {
            ctx.add(a, &node.offset)
        };
        f(ctx, &x)
    };

    // level 0: h = 1 with all j
    let mut total = ctx.zero();
    for node in level_nodes(ctx, 1, 1, true, &len) {
        let v = eval_at(ctx, &node);
        total = ctx.add(&total, &ctx.mul(&v, &node.weight));
    }
    let mut prev = total.clone();
    let mut h_den = 1i64;
    for _level in 1..=14 {
        h_den *= 2;
        let mut add = ctx.zero();
        for node in level_nodes(ctx, 1, h_den, false, &len) {
            let v = eval_at(ctx, &node);
            add = ctx.add(&add, &ctx.mul(&v, &node.weight));
        }
        // Old weights carried the previous step; new nodes already carry
        // the halved step in their weights.
        total = ctx.add(&ctx.div(&total, &two), &add);
        // convergence: |I_l - I_{l-1}| <= 2^-target |I_l|
        let diff = ctx.sub(&total, &prev).abs();
        let tol = ctx.mul(&total.abs(), &ctx.pow2(-(target_bits as i64)));
        if ctx.le(&diff, &tol) && _level >= 3 {
            return Ok(total);
        }
        prev = total.clone();
    }
    Err(QuadratureError::NoConvergence)
}
