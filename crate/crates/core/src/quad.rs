//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! The per-panel error is the raw difference between the Kronrod and the
//! embedded 10-point Gauss estimates (no QUADPACK rescaling), floored at a
//! rounding allowance, so the reported error is conservative.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::EPS;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452752,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One application of the 21-point rule on [a, b]: (integral, error).
pub fn gauss_kronrod21<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs_sum = WGK[10] * fc.abs();
    for i in 0..10 {
        let dx = h * XGK[i];
        let (f1, f2) = (f(c - dx), f(c + dx));
        kronrod += WGK[i] * (f1 + f2);
        abs_sum += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let value = kronrod * h;
    let err = ((kronrod - gauss) * h).abs().max(50.0 * EPS * abs_sum * h.abs());
    (value, err)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of bisections applied to any initial panel.
    pub max_depth: u32,
    pub max_panels: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings { abs_tol: 1e-12, rel_tol: 1e-10, max_depth: 40, max_panels: 2_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub panels: usize,
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over [breaks[0], breaks[last]], starting from the panels
/// delimited by the sorted `breaks` and bisecting the worst panels until
/// the summed error meets the tolerance.
pub fn integrate<F>(f: &F, breaks: &[f64], settings: &QuadSettings) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    if breaks.len() < 2 {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0, panels: 0 });
    }
    let eval = |a: f64, b: f64, depth: u32| {
        let (value, err) = gauss_kronrod21(f, a, b);
        Panel { a, b, value, err, depth }
    };
    let initial: Vec<Panel> = breaks
        .par_windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| eval(w[0], w[1], 0))
        .collect();
    let mut evaluations = 21 * initial.len();
    let mut heap: BinaryHeap<Panel> = initial.into_iter().collect();

    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        let tol = settings.abs_tol.max(settings.rel_tol * value.abs());
        if err <= tol {
            return Ok(QuadResult { value, abs_error: err, evaluations, panels: heap.len() });
        }
        if heap.len() >= settings.max_panels {
            let worst = heap.peek().expect("non-empty");
            return Err(Error::Convergence(format!(
                "quadrature hit the panel cap with error {err:.3e} > {tol:.3e}; worst panel [{}, {}]",
                worst.a, worst.b
            )));
        }
        // Refine the worst panels together, enough of them to matter.
        let mut batch = Vec::new();
        let mut removed = 0.0;
        while let Some(p) = heap.pop() {
            if p.depth >= settings.max_depth {
                return Err(Error::Convergence(format!(
                    "quadrature panel [{}, {}] not converged after {} bisections (error {:.3e})",
                    p.a, p.b, p.depth, p.err
                )));
            }
            removed += p.err;
            batch.push(p);
            if batch.len() >= 64 || err - removed <= 0.5 * tol {
                break;
            }
        }
        let refined: Vec<Panel> = batch
            .par_iter()
            .flat_map_iter(|p| {
                let m = 0.5 * (p.a + p.b);
                [eval(p.a, m, p.depth + 1), eval(m, p.b, p.depth + 1)]
            })
            .collect();
        evaluations += 21 * refined.len();
        heap.extend(refined);
    }
}
