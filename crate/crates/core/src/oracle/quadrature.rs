//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::collections::BinaryHeap;

use crate::model::ModelParams;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

/// Integrates `f` over `[a, b]`, bisecting the piece with the largest error
/// estimate until the total estimate drops below `rel_tol * |value|`.
pub fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Quadrature {
    let (v, e) = kronrod(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let (mut value, mut error) = (v, e);
    let mut intervals = 1;
    while error > rel_tol * value.abs() && intervals < 100_000 {
        let p = heap.pop().expect("non-empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = kronrod(f, p.a, m);
        let (v2, e2) = kronrod(f, m, p.b);
        value += v1 + v2 - p.value;
        error += e1 + e2 - p.error;
        heap.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, error: e2 });
        intervals += 1;
    }
    // re-sum to shed the drift of the running totals
    let value = heap.iter().map(|p| p.value).sum();
    let error_estimate = heap.iter().map(|p| p.error).sum();
    Quadrature { value, error_estimate, intervals }
}

/// Terminal-spread variance density at time-to-go `s`, built directly from
/// the noise loadings of the spread forecast.
pub fn variance_density(s: f64, params: &ModelParams) -> f64 {
    let r = params.reduced_cost_coefficient();
    let den = (r + params.nu) * s + 2.0 * params.gamma;
    // sensitivities of the forecast to price and demand shocks
    let by_price = s / den;
    let by_demand = (params.nu * s + 2.0 * params.gamma) / den;
    let (s0, sd) = (params.sigma0, params.sigma_d);
    s0 * s0 * by_price * by_price + sd * sd * by_demand * by_demand + 2.0 * params.rho * s0 * sd * by_price * by_demand
}

/// Quadrature of [`variance_density`] over `[from, to]` in time-to-go.
///
/// The density has a peak of width `2 gamma / (r + nu)` at zero, far below
/// any panel the error estimate would notice when `gamma` is tiny, so the
/// integral is taken in `u = ln(1 + (r + nu) s / (2 gamma))`.
pub fn variance_by_quadrature(from: f64, to: f64, params: &ModelParams) -> Quadrature {
    let a = params.reduced_cost_coefficient() + params.nu;
    let c = 2.0 * params.gamma;
    let f = |u: f64| {
        let s = c / a * u.exp_m1();
        variance_density(s, params) * (c + a * s) / a
    };
    integrate_adaptive(&f, (a * from / c).ln_1p(), (a * to / c).ln_1p(), 1e-10)
}
