//! Central-difference gradient verification.

use super::param::Param;
use crate::rng::Rng;

/// Anything whose scalar loss can be evaluated and differentiated.
///
/// `loss_and_grad` must zero existing gradients, run the engine forward and
/// backward, and leave fresh gradients on every parameter. `loss` must be an
/// independent re-evaluation at the current parameter values — model
/// harnesses route it through the f64 reference implementations so finite
/// differences carry no f32 evaluation noise. `loss_with_margin`
/// additionally reports the distance to the nearest relu/pool/huber
/// decision boundary encountered, letting the checker exclude
/// kink-adjacent coordinates.
pub trait Differentiable {
    fn loss(&mut self) -> f64;
    fn loss_and_grad(&mut self) -> f64;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn loss_probe(&mut self) -> LossProbe {
        LossProbe {
            loss: self.loss(),
            margin: f64::INFINITY,
            signature: 0,
        }
    }
}

/// One reference evaluation with its kink diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct LossProbe {
    pub loss: f64,
    /// Distance to the nearest decision boundary.
    pub margin: f64,
    /// Hash of all decision bits taken during the evaluation.
    pub signature: u64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f32,
    pub coords_checked: usize,
    pub coords_skipped: usize,
}

fn read_coord(model: &mut dyn Differentiable, pi: usize, ci: usize) -> f32 {
    model.params_mut()[pi].value.data()[ci]
}

fn write_coord(model: &mut dyn Differentiable, pi: usize, ci: usize, v: f32) {
    model.params_mut()[pi].value.data_mut()[ci] = v;
}

struct DiffEstimate {
    fd: f64,
    margin: f64,
    /// False when the two endpoint evaluations took different decision
    /// branches somewhere: the window straddles a kink.
    same_branches: bool,
}

fn central_diff(model: &mut dyn Differentiable, pi: usize, ci: usize, eps: f32) -> DiffEstimate {
    let original = read_coord(model, pi, ci);
    let hi = original + eps;
    let lo = original - eps;
    write_coord(model, pi, ci, hi);
    let plus = model.loss_probe();
    write_coord(model, pi, ci, lo);
    let minus = model.loss_probe();
    write_coord(model, pi, ci, original);
    // Use the actually-applied f32 perturbation, not the nominal epsilon.
    DiffEstimate {
        fd: (plus.loss - minus.loss) / (hi as f64 - lo as f64),
        margin: plus.margin.min(minus.margin),
        same_branches: plus.signature == minus.signature,
    }
}

/// Evaluations where some relu input, pool tie, or Huber branch sits this
/// close to its decision boundary are excluded: at that distance the f32
/// engine can read the boundary the other way than the f64 reference. The
/// threshold is deliberately tiny — in a net with 10^5 units the smallest
/// margin is small by sheer density, and a flip that close to the boundary
/// barely perturbs the gradient. Kinks crossed inside the window are
/// caught separately by comparing endpoint decision signatures.
pub const KINK_MARGIN: f64 = 1e-9;

/// Compares analytic gradients against central finite differences on a
/// random subsample of at least `min_coords` parameter coordinates.
///
/// Coordinate selection skips entries whose analytic gradient is below 1%
/// of the largest gradient (their f32 representation carries no reliable
/// signal). Kink-adjacent coordinates — where a perturbed evaluation comes
/// within [`KINK_MARGIN`] of a relu/pool/huber decision boundary, or where
/// halving epsilon shifts the estimate materially — are resampled. The
/// per-coordinate relative error is |ga - gfd| / max(|ga|, |gfd|,
/// 0.05 * gmax): the 5%-of-scale floor keeps near-zero components from
/// dividing noise by noise while still flagging any real gradient bug,
/// which produces errors on the order of the gradient scale itself.
pub fn grad_check(
    model: &mut dyn Differentiable,
    epsilon: f32,
    min_coords: usize,
    rng: &mut Rng,
) -> GradCheckReport {
    assert!(epsilon > 0.0, "epsilon must be positive");
    model.loss_and_grad();

    let analytic: Vec<Vec<f32>> = model
        .params_mut()
        .iter()
        .map(|p| p.value.grad().map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; p.value.len()]))
        .collect();

    let g_max = analytic
        .iter()
        .flat_map(|g| g.iter())
        .fold(0.0f32, |acc, &g| acc.max(g.abs()));
    assert!(g_max > 0.0, "all analytic gradients are zero; nothing to check");
    let select_floor = 1e-2 * g_max;
    let denom_floor = (5e-2 * g_max) as f64;

    let mut coords: Vec<(usize, usize)> = Vec::new();
    for (pi, grads) in analytic.iter().enumerate() {
        for (ci, &g) in grads.iter().enumerate() {
            if g.abs() >= select_floor {
                coords.push((pi, ci));
            }
        }
    }
    rng.shuffle(&mut coords);

    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for &(pi, ci) in coords.iter() {
        if checked >= min_coords {
            break;
        }
        let ga = analytic[pi][ci] as f64;
        // In deep nets every perturbation of an early weight moves tens of
        // thousands of preactivations, so a fixed window usually straddles
        // some relu flip. Shrink the window until the endpoint decision
        // signatures agree; the f64 reference keeps tiny steps noise-free.
        let mut chosen = None;
        let mut eps_try = epsilon;
        for _ in 0..4 {
            let candidate = central_diff(model, pi, ci, eps_try);
            if candidate.margin >= KINK_MARGIN && candidate.same_branches {
                chosen = Some((candidate, eps_try));
                break;
            }
            eps_try *= 0.25;
        }
        let (full, eps_used) = match chosen {
            Some(pair) => pair,
            None => {
                skipped += 1;
                continue;
            }
        };
        let rel_full = (ga - full.fd).abs() / ga.abs().max(full.fd.abs()).max(denom_floor);
        if rel_full < 1e-4 {
            // Fast path: agreement this tight cannot hide a kink artifact.
            max_rel = max_rel.max(rel_full);
            checked += 1;
            continue;
        }
        // Suspicious coordinate: cross-check at half epsilon. A residual
        // kink artifact makes the two estimates inconsistent; a wrong
        // gradient keeps them consistent with each other while both
        // disagree with the analytic value.
        let half = central_diff(model, pi, ci, eps_used * 0.5);
        if half.margin < KINK_MARGIN || !half.same_branches {
            skipped += 1;
            continue;
        }
        let denom = full.fd.abs().max(half.fd.abs()).max(denom_floor);
        if (full.fd - half.fd).abs() / denom > 1e-2 {
            skipped += 1;
            continue;
        }
        let rel = (ga - half.fd).abs() / ga.abs().max(half.fd.abs()).max(denom_floor);
        if rel > max_rel {
            max_rel = rel;
        }
        checked += 1;
    }
    assert!(
        checked > 0,
        "gradient check could not find any usable coordinates (all kink-adjacent?)"
    );
    GradCheckReport {
        max_rel_error: max_rel as f32,
        coords_checked: checked,
        coords_skipped: skipped,
    }
}
