//! Complex linear-algebra primitives shared by every optimizer stage.
//!
//! All matrices are dense `nalgebra` matrices of `Complex64`. Vectors are
//! column vectors. Powers are linear watts throughout; decibel values are
//! converted at the configuration boundary only.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Cx = Complex64;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Default relative tolerance of [`bisect_power_multiplier`].
pub const BISECT_TOL: f64 = 1e-6;

/// Cholesky pivots below this fraction of the mean diagonal mark `A` as
/// numerically singular.
const SINGULAR_PIVOT: f64 = 1e-14;

const BISECT_MAX_HALVINGS: usize = 200;
const BISECT_MAX_DOUBLINGS: usize = 2048;

pub fn zeros_vec(n: usize) -> CVec {
    CVec::zeros(n)
}

pub fn zeros_mat(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `a·bᴴ` for column vectors.
pub fn outer(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}

/// `aᴴ·b`.
pub fn inner(a: &CVec, b: &CVec) -> Cx {
    a.dotc(b)
}

/// Adds `v·vᴴ` into `acc` in place.
pub fn add_outer(acc: &mut CMat, v: &CVec) {
    acc.ger(Cx::new(1.0, 0.0), v, &v.conjugate(), Cx::new(1.0, 0.0));
}

pub fn is_finite_mat(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_finite_vec(v: &CVec) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Checks `‖A − Aᴴ‖_max ≤ tol·‖A‖_max`.
pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = max_abs(a);
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Solves `A·X = B` for Hermitian positive semidefinite `A`.
///
/// Uses a Cholesky factorization. A singular (semidefinite) `A` is replaced
/// by the ridge-regularized `A + εI` with `ε = 1e-12·trace(A)/rows`. The
/// all-zero system `0·X = 0` returns zero.
pub fn hermitian_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    const OP: &str = "hermitian_solve";
    if !a.is_square() {
        return Err(Error::contract(OP, format!("A is {}x{}, not square", a.nrows(), a.ncols())));
    }
    if a.nrows() != b.nrows() {
        return Err(Error::contract(
            OP,
            format!("A has {} rows but b has {}", a.nrows(), b.nrows()),
        ));
    }
    if !is_finite_mat(a) || !is_finite_mat(b) {
        return Err(Error::contract(OP, "non-finite entries"));
    }
    if !is_hermitian(a, HERMITIAN_TOL) {
        return Err(Error::contract(OP, "A is not Hermitian"));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(b.clone());
    }
    let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
    if let Some(chol) = a.clone().cholesky() {
        // A factorization of a singular matrix can succeed on rounding
        // residue; such pivots are treated as exact zeros.
        let l = chol.l_dirty();
        let min_pivot = (0..n).map(|i| l[(i, i)].norm_sqr()).fold(f64::INFINITY, f64::min);
        if min_pivot > SINGULAR_PIVOT * trace / n as f64 {
            let x = chol.solve(b);
            if is_finite_mat(&x) {
                return Ok(x);
            }
        }
    }
    if trace <= 0.0 {
        if b.iter().all(|z| *z == Cx::new(0.0, 0.0)) {
            return Ok(CMat::zeros(n, b.ncols()));
        }
        return Err(Error::contract(OP, "A is zero but b is not"));
    }
    let eps = 1e-12 * trace / n as f64;
    let mut ridged = a.clone();
    for i in 0..n {
        ridged[(i, i)] += eps;
    }
    if let Some(chol) = ridged.clone().cholesky() {
        let x = chol.solve(b);
        if is_finite_mat(&x) {
            return Ok(x);
        }
    }
    // Cholesky can still reject a ridged matrix that is PSD only up to
    // rounding; LU handles that residue.
    ridged
        .lu()
        .solve(b)
        .filter(is_finite_mat)
        .ok_or_else(|| Error::contract(OP, "system is singular after ridge regularization"))
}

/// Vector convenience wrapper around [`hermitian_solve`].
pub fn hermitian_solve_vec(a: &CMat, b: &CVec) -> Result<CVec> {
    let x = hermitian_solve(a, &CMat::from_column_slice(b.len(), 1, b.as_slice()))?;
    Ok(CVec::from_column_slice(x.as_slice()))
}

/// Checks `ΠᴴΠ = τ·I` to `1e-10·τ`.
pub fn check_pilot_block(pilots: &CMat, tau: usize) -> Result<()> {
    const OP: &str = "project_pilot_subspace";
    if pilots.nrows() != tau {
        return Err(Error::contract(
            OP,
            format!("pilot block has {} rows, expected tau = {tau}", pilots.nrows()),
        ));
    }
    let gram = pilots.adjoint() * pilots;
    let t = tau as f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { t } else { 0.0 };
            if (gram[(i, j)] - Cx::new(target, 0.0)).norm() > 1e-10 * t {
                return Err(Error::contract(OP, "pilot columns are not orthogonal with norm² = tau"));
            }
        }
    }
    Ok(())
}

/// Projects the rows of `y` onto the span of the pilot block: `Y·Π·Πᴴ/τ`.
pub fn project_pilot_subspace(y: &CMat, pilots: &CMat, tau: usize) -> Result<CMat> {
    check_pilot_block(pilots, tau)?;
    if y.ncols() != tau {
        return Err(Error::contract(
            "project_pilot_subspace",
            format!("Y has {} columns, expected tau = {tau}", y.ncols()),
        ));
    }
    Ok(project_unchecked(y, pilots, tau))
}

/// [`project_pilot_subspace`] for pilot blocks already known to be valid.
pub(crate) fn project_unchecked(y: &CMat, pilots: &CMat, tau: usize) -> CMat {
    if pilots.ncols() == 0 {
        return CMat::zeros(y.nrows(), y.ncols());
    }
    (y * pilots) * pilots.adjoint() / Cx::new(tau as f64, 0.0)
}

/// Finds the smallest multiplier `λ ≥ 0` with `eval(λ) ≤ budget`.
///
/// `eval` must be decreasing in `λ` and vanish as `λ → ∞`. Returns `0` when
/// the constraint is inactive; otherwise the returned `λ` satisfies
/// `eval(λ) ≤ budget` and `|eval(λ) − budget| ≤ tol·budget` whenever the
/// bracket can be resolved within 200 halvings. The bracket upper end starts
/// at 1 and is doubled until it is feasible.
pub fn bisect_power_multiplier<F>(mut eval: F, budget: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const OP: &str = "bisect_power_multiplier";
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::contract(OP, format!("budget must be positive, got {budget}")));
    }
    if !(tol > 0.0) {
        return Err(Error::contract(OP, "tolerance must be positive"));
    }
    let at_zero = eval(0.0)?;
    if !at_zero.is_finite() {
        return Err(Error::contract(OP, "eval(0) is not finite"));
    }
    if at_zero <= budget {
        return Ok(0.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut p_hi = eval(hi)?;
    let mut doublings = 0;
    while !(p_hi < budget) {
        lo = hi;
        hi *= 2.0;
        p_hi = eval(hi)?;
        doublings += 1;
        if doublings > BISECT_MAX_DOUBLINGS {
            return Err(Error::contract(OP, "eval does not fall below the budget"));
        }
    }
    for _ in 0..BISECT_MAX_HALVINGS {
        if (budget - p_hi) <= tol * budget {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p_mid = eval(mid)?;
        if p_mid <= budget {
            hi = mid;
            p_hi = p_mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) / 1000.0
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1000.0)
}

/// A reproducible random stream identified by `(seed, stream id)`.
///
/// Backed by ChaCha20 with the stream id selecting an independent
/// keystream, so draws depend only on the pair and never on thread
/// scheduling.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    /// Stream whose id is a hash of a label path, e.g. `[drop, PURPOSE, iter]`.
    pub fn derived(seed: u64, labels: &[u64]) -> Self {
        Self::new(seed, stream_id(labels))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn index(&mut self, upper: usize) -> usize {
        self.rng.random_range(0..upper)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a label path into a stream id.
pub fn stream_id(labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(0x5EED_F00D_u64, |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// I.i.d. circularly-symmetric complex Gaussian matrix with per-entry
/// variance `variance` (real and imaginary parts each `variance/2`).
pub fn draw_complex_gaussian(
    rng: &mut RngStream,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Result<CMat> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::contract(
            "draw_complex_gaussian",
            format!("variance must be finite and non-negative, got {variance}"),
        ));
    }
    let sd = (variance / 2.0).sqrt();
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            let re = rng.standard_normal();
            let im = rng.standard_normal();
            m[(r, c)] = Cx::new(sd * re, sd * im);
        }
    }
    Ok(m)
}
