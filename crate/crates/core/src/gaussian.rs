//! One-dimensional Gaussians and weighted Gaussian mixtures.
//!
//! Everything the message-passing decoders manipulate is built from the
//! closed-form algebra in this module:
//!
//! * **product** — a product of Gaussian densities is Gaussian: precisions
//!   add and precision-weighted means add,
//! * **stretch** — scaling the variable by `c` maps `(m, v)` to `(c·m, c²·v)`,
//! * **convolve** — the density of a sum of independent variables adds means
//!   and variances,
//! * **periodic extension** — replicating a mixture over a discrete set of
//!   integer shifts,
//! * **reduce** — resolution control: weight flooring plus greedy
//!   moment-preserving merges keep mixtures at a bounded size.
//!
//! Weights live in log space from construction to output; mixtures are
//! renormalized (log-sum-exp of weights equal to zero) after every public
//! operation, so relative weights spanning hundreds of orders of magnitude
//! survive round trips without underflow.

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// Default cap on the number of components a cross product may produce.
pub const DEFAULT_CROSS_CAP: usize = 1_000_000;

/// Iteration budget for the local-ascent mode search.
const MODE_ASCENT_LIMIT: usize = 200;

/// Largest mixture the greedy merge will process directly; bigger inputs are
/// first trimmed to this many components by weight. The trim is a safeguard
/// for pathological inputs (the distance table is quadratic in size); every
/// decoder path reduces far below it.
const MERGE_TABLE_LIMIT: usize = 2048;

/// A one-dimensional Gaussian in moment form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian {
    /// Builds a Gaussian, rejecting non-finite means and non-positive or
    /// non-finite variances.
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::Domain(format!("gaussian mean must be finite, got {mean}")));
        }
        if !variance.is_finite() || variance <= 0.0 {
            return Err(Error::Domain(format!(
                "gaussian variance must be positive and finite, got {variance}"
            )));
        }
        Ok(Gaussian { mean, variance })
    }

    /// Information-form parameters `(alpha, beta) = (1/v, m/v)`.
    pub fn information(&self) -> (f64, f64) {
        (1.0 / self.variance, self.mean / self.variance)
    }

    /// Builds from information-form parameters; `alpha` must be positive.
    pub fn from_information(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::Domain(format!(
                "information-form precision must be positive and finite, got {alpha}"
            )));
        }
        Gaussian::new(beta / alpha, 1.0 / alpha)
    }

    /// Natural log of the density at `x`.
    pub fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (LN_2PI + self.variance.ln()) - d * d / (2.0 * self.variance)
    }
}

/// A mixture component: a Gaussian with a log-domain weight.
#[derive(Clone, Copy, Debug)]
pub struct WeightedComponent {
    pub log_weight: f64,
    pub gaussian: Gaussian,
}

/// A normalized Gaussian mixture.
///
/// Invariants: at least one component, all parameters finite, and the
/// log-sum-exp of the log weights is zero after every public operation.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    components: Vec<WeightedComponent>,
}

impl GaussianMixture {
    /// Builds a mixture from components, normalizing the weights.
    ///
    /// Log weights may be any finite value or `-inf` mixed with finite ones;
    /// what matters is that at least one component carries mass.
    pub fn new(components: Vec<WeightedComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("mixture must have at least one component".into()));
        }
        for c in &components {
            if c.log_weight.is_nan() || c.log_weight == f64::INFINITY {
                return Err(Error::Domain(format!(
                    "component log-weight must not be NaN or +inf, got {}",
                    c.log_weight
                )));
            }
            Gaussian::new(c.gaussian.mean, c.gaussian.variance)?;
        }
        let mut mix = GaussianMixture { components };
        mix.normalize()?;
        Ok(mix)
    }

    /// The single-component mixture around `g`.
    pub fn single(g: Gaussian) -> Self {
        GaussianMixture { components: vec![WeightedComponent { log_weight: 0.0, gaussian: g }] }
    }

    pub fn components(&self) -> &[WeightedComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Natural log of the mixture density at `x`.
    pub fn log_density(&self, x: f64) -> f64 {
        let logs: Vec<f64> =
            self.components.iter().map(|c| c.log_weight + c.gaussian.log_density(x)).collect();
        log_sum_exp(&logs)
    }

    fn normalize(&mut self) -> Result<()> {
        let logs: Vec<f64> = self.components.iter().map(|c| c.log_weight).collect();
        let total = log_sum_exp(&logs);
        if !total.is_finite() {
            return Err(Error::Domain("mixture weights carry no mass; cannot normalize".into()));
        }
        for c in &mut self.components {
            c.log_weight -= total;
        }
        Ok(())
    }
}

/// Numerically stable `ln(sum(exp(x)))`.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Product of Gaussian densities.
///
/// Precisions add and precision-weighted means add:
/// `1/v = Σ 1/v_i`, `m = v · Σ m_i/v_i`. The returned scale is the log of the
/// proportionality constant, i.e. the product density evaluated at the output
/// mean divided by the output density there, so that
/// `Π N(x; m_i, v_i) = exp(log_scale) · N(x; m, v)` pointwise.
pub fn product(gaussians: &[Gaussian]) -> Result<(Gaussian, f64)> {
    if gaussians.is_empty() {
        return Err(Error::InvalidArgument("product of zero gaussians is undefined".into()));
    }
    let mut alpha = 0.0;
    let mut beta = 0.0;
    for g in gaussians {
        let (a, b) = g.information();
        alpha += a;
        beta += b;
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Domain(format!("product precision degenerate: {alpha}")));
    }
    let out = Gaussian { mean: beta / alpha, variance: 1.0 / alpha };
    let mut log_scale = 0.5 * (LN_2PI + out.variance.ln());
    for g in gaussians {
        log_scale += g.log_density(out.mean);
    }
    Ok((out, log_scale))
}

/// Cross product of mixtures, with an optional extra single-Gaussian factor
/// multiplied into every pairing.
///
/// Every selection of one component per input mixture yields one output
/// component via [`product`]; its log weight is the sum of the selected log
/// weights plus the product's log scale (the density ratio evaluated at the
/// output component mean). The output has `Π len_i` components — the caller
/// is expected to [`reduce`] afterwards — and is rejected if that count
/// exceeds `cap`.
pub fn mixture_product(
    mixtures: &[&GaussianMixture],
    extra: Option<Gaussian>,
    cap: usize,
) -> Result<GaussianMixture> {
    if mixtures.is_empty() {
        return match extra {
            Some(g) => Ok(GaussianMixture::single(g)),
            None => Err(Error::InvalidArgument(
                "mixture product needs at least one mixture or an extra factor".into(),
            )),
        };
    }
    let mut total: usize = 1;
    for m in mixtures {
        total = total.checked_mul(m.len()).ok_or(Error::Capacity { requested: usize::MAX, cap })?;
    }
    if total > cap {
        return Err(Error::Capacity { requested: total, cap });
    }

    let mut out = Vec::with_capacity(total);
    let mut selection = vec![0usize; mixtures.len()];
    let mut factors: Vec<Gaussian> = Vec::with_capacity(mixtures.len() + 1);
    loop {
        factors.clear();
        let mut log_w = 0.0;
        for (mi, &ci) in mixtures.iter().zip(selection.iter()) {
            let c = mi.components()[ci];
            factors.push(c.gaussian);
            log_w += c.log_weight;
        }
        if let Some(g) = extra {
            factors.push(g);
        }
        let (g, log_scale) = product(&factors)?;
        out.push(WeightedComponent { log_weight: log_w + log_scale, gaussian: g });

        // advance the odometer
        let mut k = mixtures.len();
        loop {
            if k == 0 {
                return GaussianMixture::new(out);
            }
            k -= 1;
            selection[k] += 1;
            if selection[k] < mixtures[k].len() {
                break;
            }
            selection[k] = 0;
        }
    }
}

/// Applies `x -> c·x` to the mixture variable: means scale by `c`, variances
/// by `c²`, weights are untouched (the `1/|c|` density scale is absorbed by
/// normalization).
pub fn stretch(mix: &GaussianMixture, c: f64) -> Result<GaussianMixture> {
    if !c.is_finite() || c == 0.0 {
        return Err(Error::Domain(format!("stretch factor must be finite and non-zero, got {c}")));
    }
    let components = mix
        .components()
        .iter()
        .map(|w| WeightedComponent {
            log_weight: w.log_weight,
            gaussian: Gaussian { mean: c * w.gaussian.mean, variance: c * c * w.gaussian.variance },
        })
        .collect();
    GaussianMixture::new(components)
}

/// Density of the sum of two independent Gaussian variables.
pub fn convolve(a: Gaussian, b: Gaussian) -> Gaussian {
    Gaussian { mean: a.mean + b.mean, variance: a.variance + b.variance }
}

/// Cross-product convolution of two mixtures: every component pair convolves,
/// log weights add.
pub fn convolve_mixtures(
    a: &GaussianMixture,
    b: &GaussianMixture,
    cap: usize,
) -> Result<GaussianMixture> {
    let total =
        a.len().checked_mul(b.len()).ok_or(Error::Capacity { requested: usize::MAX, cap })?;
    if total > cap {
        return Err(Error::Capacity { requested: total, cap });
    }
    let mut out = Vec::with_capacity(total);
    for ca in a.components() {
        for cb in b.components() {
            out.push(WeightedComponent {
                log_weight: ca.log_weight + cb.log_weight,
                gaussian: convolve(ca.gaussian, cb.gaussian),
            });
        }
    }
    GaussianMixture::new(out)
}

/// Replicates the mixture over a set of integer shifts: for each component
/// and each integer `b`, the mean moves to `(-b)/coeff + m`. Weights are
/// replicated uniformly and renormalized; variances are untouched.
pub fn periodic_extend(
    mix: &GaussianMixture,
    integers: &[i64],
    coeff: f64,
) -> Result<GaussianMixture> {
    if integers.is_empty() {
        return Err(Error::InvalidArgument(
            "periodic extension needs a non-empty shift set".into(),
        ));
    }
    if !coeff.is_finite() || coeff == 0.0 {
        return Err(Error::Domain(format!(
            "periodic extension coefficient must be finite and non-zero, got {coeff}"
        )));
    }
    let penalty = (integers.len() as f64).ln();
    let mut out = Vec::with_capacity(mix.len() * integers.len());
    for c in mix.components() {
        for &b in integers {
            out.push(WeightedComponent {
                log_weight: c.log_weight - penalty,
                gaussian: Gaussian {
                    mean: (-b as f64) / coeff + c.gaussian.mean,
                    variance: c.gaussian.variance,
                },
            });
        }
    }
    GaussianMixture::new(out)
}

/// Symmetrized Kullback-Leibler divergence between two Gaussians; the log
/// terms of the two directed divergences cancel, leaving a closed form free
/// of transcendentals.
fn symmetric_kl(a: Gaussian, b: Gaussian) -> f64 {
    let dm = a.mean - b.mean;
    let d2 = dm * dm;
    0.5 * ((a.variance + d2) / b.variance + (b.variance + d2) / a.variance - 2.0)
}

/// Moment-preserving merge of two weighted components.
fn merge_pair(a: WeightedComponent, b: WeightedComponent) -> WeightedComponent {
    let log_w = log_add_exp(a.log_weight, b.log_weight);
    let wa = (a.log_weight - log_w).exp();
    let wb = (b.log_weight - log_w).exp();
    let (ga, gb) = (a.gaussian, b.gaussian);
    let mean = wa * ga.mean + wb * gb.mean;
    let variance = wa * (ga.variance + ga.mean * ga.mean) + wb * (gb.variance + gb.mean * gb.mean)
        - mean * mean;
    WeightedComponent { log_weight: log_w, gaussian: Gaussian { mean, variance } }
}

/// Resolution control for mixtures.
///
/// First drops components whose normalized weight falls below `weight_floor`
/// (the heaviest component always survives), then greedily merges the pair
/// with the smallest symmetrized KL divergence until at most
/// `max_components` remain. Each merge preserves the total mean and variance
/// of the pair; the final mixture is renormalized and sorted by descending
/// weight.
pub fn reduce(
    mix: &GaussianMixture,
    max_components: usize,
    weight_floor: f64,
) -> Result<GaussianMixture> {
    if max_components == 0 {
        return Err(Error::InvalidArgument("max_components must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&weight_floor) {
        return Err(Error::InvalidArgument(format!(
            "weight_floor must lie in [0, 1), got {weight_floor}"
        )));
    }

    let log_floor = if weight_floor == 0.0 { f64::NEG_INFINITY } else { weight_floor.ln() };
    let heaviest = mix
        .components()
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.log_weight.total_cmp(&b.log_weight))
        .map(|(i, _)| i)
        .expect("mixture is never empty");
    let mut live: Vec<WeightedComponent> = mix
        .components()
        .iter()
        .enumerate()
        .filter(|(i, c)| *i == heaviest || c.log_weight >= log_floor)
        .map(|(_, c)| *c)
        .collect();

    if live.len() > MERGE_TABLE_LIMIT {
        live.sort_by(|a, b| b.log_weight.total_cmp(&a.log_weight));
        live.truncate(MERGE_TABLE_LIMIT);
    }

    if live.len() > max_components {
        greedy_merge(&mut live, max_components);
    }

    live.sort_by(|a, b| {
        b.log_weight.total_cmp(&a.log_weight).then(a.gaussian.mean.total_cmp(&b.gaussian.mean))
    });
    GaussianMixture::new(live)
}

/// Merges the closest pair repeatedly until `target` components remain.
///
/// Keeps a symmetric divergence table plus each row's nearest neighbor, so a
/// merge only rescans the rows it touched instead of every pair.
fn greedy_merge(comps: &mut Vec<WeightedComponent>, target: usize) {
    let k = comps.len();
    let mut alive: Vec<bool> = vec![true; k];
    let mut dist = vec![f64::INFINITY; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = symmetric_kl(comps[i].gaussian, comps[j].gaussian);
            dist[i * k + j] = d;
            dist[j * k + i] = d;
        }
    }
    // nearest[i] = (divergence, index) of i's closest alive partner.
    let scan_row = |dist: &[f64], alive: &[bool], i: usize| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..k {
            if j != i && alive[j] {
                let d = dist[i * k + j];
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        best
    };
    let mut nearest: Vec<(f64, usize)> = (0..k).map(|i| scan_row(&dist, &alive, i)).collect();

    let mut remaining = k;
    while remaining > target {
        let mut i = usize::MAX;
        let mut best = f64::INFINITY;
        for l in 0..k {
            if alive[l] && nearest[l].0 < best {
                best = nearest[l].0;
                i = l;
            }
        }
        let j = nearest[i].1;
        comps[i] = merge_pair(comps[i], comps[j]);
        alive[j] = false;
        remaining -= 1;

        // Refresh distances from the merged component, tightening neighbors
        // of untouched rows on the fly.
        for l in 0..k {
            if l == i || !alive[l] {
                continue;
            }
            let d = symmetric_kl(comps[i].gaussian, comps[l].gaussian);
            dist[i * k + l] = d;
            dist[l * k + i] = d;
            if d < nearest[l].0 {
                nearest[l] = (d, i);
            }
        }
        nearest[i] = scan_row(&dist, &alive, i);
        // Rows that pointed at a vanished or changed component rescan.
        for l in 0..k {
            if alive[l] && l != i && (nearest[l].1 == j || nearest[l].1 == i) {
                nearest[l] = scan_row(&dist, &alive, l);
            }
        }
    }
    let mut out = Vec::with_capacity(target);
    for (i, c) in comps.iter().enumerate() {
        if alive[i] {
            out.push(*c);
        }
    }
    *comps = out;
}

/// Overall mean and variance of the mixture (law of total variance).
pub fn moments(mix: &GaussianMixture) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for c in mix.components() {
        let w = c.log_weight.exp();
        mean += w * c.gaussian.mean;
        second += w * (c.gaussian.variance + c.gaussian.mean * c.gaussian.mean);
    }
    (mean, second - mean * mean)
}

/// Global mode of the mixture density.
///
/// Runs a fixed-point local ascent from every component mean (the classic
/// mean-shift update, monotone for Gaussian mixtures) and returns the best
/// candidate; near-ties are broken toward the smaller value.
pub fn mode(mix: &GaussianMixture) -> f64 {
    let comps = mix.components();
    if comps.len() == 1 {
        return comps[0].gaussian.mean;
    }
    let mut logs = vec![0.0f64; comps.len()];
    let mut best_x = f64::NAN;
    let mut best_ld = f64::NEG_INFINITY;
    for start in comps {
        let mut x = start.gaussian.mean;
        for _ in 0..MODE_ASCENT_LIMIT {
            for (l, c) in logs.iter_mut().zip(comps.iter()) {
                *l = c.log_weight + c.gaussian.log_density(x);
            }
            let lse = log_sum_exp(&logs);
            if !lse.is_finite() {
                break;
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for (l, c) in logs.iter().zip(comps.iter()) {
                let r = (*l - lse).exp();
                num += r * c.gaussian.mean / c.gaussian.variance;
                den += r / c.gaussian.variance;
            }
            if den <= 0.0 {
                break;
            }
            let next = num / den;
            let done = (next - x).abs() <= 1e-13 * (1.0 + x.abs());
            x = next;
            if done {
                break;
            }
        }
        if !x.is_finite() {
            continue;
        }
        let ld = mix.log_density(x);
        let better = if best_x.is_nan() {
            true
        } else {
            // Candidates whose log densities agree to relative 1e-9 count as
            // tied; the smaller location wins a tie.
            let tie = 1e-9 * best_ld.abs().max(1.0);
            ld > best_ld + tie || (ld >= best_ld - tie && x < best_x)
        };
        if better {
            best_x = x;
            best_ld = ld;
        }
    }
    assert!(best_x.is_finite(), "mode search lost all candidates");
    best_x
}
