//! Quadrature rules and compensated summation shared by the solvers and
//! the path-wise estimators.

/// 4-point Gauss-Legendre nodes on [-1, 1].
const GL4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_W: [f64; 4] = [
    0.347_854_845_137_453_8,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_8,
];

/// 8-point Gauss-Legendre nodes on [-1, 1].
const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Nodes and weights of the 4-point Gauss rule mapped to [a, b].
/// Exact for polynomials of degree 7.
pub fn gauss4(a: f64, b: f64) -> [(f64, f64); 4] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    std::array::from_fn(|i| (mid + half * GL4_X[i], half * GL4_W[i]))
}

/// ∫_a^b f with the 4-point Gauss rule.
pub fn integrate_gauss4(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    gauss4(a, b).iter().map(|&(x, w)| w * f(x)).sum()
}

/// Composite 8-point Gauss-Legendre over `panels` equal panels.
pub fn integrate(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut acc = NeumaierSum::default();
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for k in 0..8 {
            s += GL8_W[k] * f(mid + 0.5 * h * GL8_X[k]);
        }
        acc.add(0.5 * h * s);
    }
    acc.value()
}

/// Adaptive Gauss-Kronrod-free bisection on the 8-point rule: refines until
/// two successive panel counts agree to `tol` (absolute).
pub fn integrate_adaptive(a: f64, b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut panels = 4;
    let mut prev = integrate(a, b, panels, &f);
    while panels < 1 << 16 {
        panels *= 2;
        let next = integrate(a, b, panels, &f);
        if (next - prev).abs() <= tol {
            return next;
        }
        prev = next;
    }
    prev
}

/// Trapezoid weights on a uniform grid of `len` nodes with spacing `h`.
pub fn trapezoid_weights(len: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; len];
    if len > 0 {
        w[0] = 0.5 * h;
        w[len - 1] = 0.5 * h;
    }
    if len == 1 {
        w[0] = 0.0;
    }
    w
}

/// Gregory end-corrected trapezoid weights (fourth order); plain
/// trapezoid weights below 8 nodes.
pub fn gregory_weights(len: usize, h: f64) -> Vec<f64> {
    if len < 8 {
        return trapezoid_weights(len, h);
    }
    let mut w = vec![h; len];
    for (i, c) in [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].into_iter().enumerate() {
        w[i] = c * h;
        w[len - 1 - i] = c * h;
    }
    w
}

/// Trapezoid rule over uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (0.5 * (values[0] + values[n - 1]) + inner)
        }
    }
}

/// Running trapezoid integral: out[i] = ∫_0^{x_i}.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Second-order nodal derivative of uniform samples: central differences
/// inside, three-point one-sided stencils at the ends. Needs 3 samples.
pub fn gradient(values: &[f64], h: f64) -> Vec<f64> {
    let g = values.len() - 1;
    (0..=g)
        .map(|i| {
            if i == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
            } else if i == g {
                (3.0 * values[g] - 4.0 * values[g - 1] + values[g - 2]) / (2.0 * h)
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Composite Simpson over uniform samples; falls back to a trapezoid on the
/// last interval when the interval count is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 3 {
        return trapezoid(values, h);
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut s = values[0] + values[even];
    for (i, v) in values.iter().enumerate().take(even).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = s * h / 3.0;
    if even < intervals {
        total += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    total
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().copied().collect::<NeumaierSum>().value() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let ss = xs
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<NeumaierSum>()
        .value();
    (mean, ss / (m - 1) as f64)
}

/// Standard error of the mean.
pub fn stderr(xs: &[f64]) -> f64 {
    let (_, var) = mean_var(xs);
    (var / xs.len() as f64).sqrt()
}
