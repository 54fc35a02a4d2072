//! Truncated Fock-space engine.
//!
//! States live on a finite photon-number lattice: a K-mode pure state stores
//! the complex amplitude tensor ⟨n₁…n_K|ψ⟩ for nₖ ≤ cutoffₖ, flattened
//! row-major with mode 0 slowest. A density operator stores the matrix over
//! the same flattened basis. Both carry a *norm deficit*: a running estimate
//! of the fraction of probability mass the truncation has discarded, so
//! callers can assert truncation error instead of guessing.
//!
//! Beam splitters conserve total photon number on the two coupled modes, so
//! exp[θ(aᵢ†aⱼ − aᵢaⱼ†)] is applied exactly block by block: within the
//! N-photon block the generator is an antisymmetric tridiagonal matrix, which
//! a diag(iᵏ) similarity turns into i·(real symmetric tridiagonal); one real
//! eigendecomposition per block then gives the exact orthogonal block.
//! Blocks that stick out past a cutoff are applied in full and clipped, and
//! the clipped mass is added to the deficit.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Herald probabilities below this floor are treated as impossible outcomes.
pub const DEFAULT_HERALD_FLOOR: f64 = 1e-300;

/// Relative weight below which eigencomponents of a density operator are
/// dropped when decomposing into pure states.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-13;

fn strides_for(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    strides
}

/// Outcome of conditioning on a measurement result: the post-selected state,
/// the probability of seeing the herald, the truncation-loss estimate carried
/// by the state, and the (mode, outcome) pattern that was projected.
#[derive(Debug, Clone)]
pub struct HeraldedResult<S> {
    pub state: S,
    pub probability: f64,
    pub norm_deficit: f64,
    pub herald_pattern: Vec<(usize, usize)>,
}

impl<S> HeraldedResult<S> {
    pub fn map<T>(self, f: impl FnOnce(S) -> T) -> HeraldedResult<T> {
        HeraldedResult {
            state: f(self.state),
            probability: self.probability,
            norm_deficit: self.norm_deficit,
            herald_pattern: self.herald_pattern,
        }
    }
}

// ---------------------------------------------------------------------------
// Pure states
// ---------------------------------------------------------------------------

/// Multimode pure state on a truncated Fock lattice.
#[derive(Debug, Clone)]
pub struct FockState {
    cutoffs: Vec<usize>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    amps: Vec<C64>,
    norm_deficit: f64,
}

impl FockState {
    pub(crate) fn from_parts(cutoffs: Vec<usize>, amps: Vec<C64>, norm_deficit: f64) -> Self {
        let dims: Vec<usize> = cutoffs.iter().map(|c| c + 1).collect();
        let strides = strides_for(&dims);
        debug_assert_eq!(amps.len(), dims.iter().product::<usize>());
        FockState { cutoffs, dims, strides, amps, norm_deficit }
    }

    /// |0…0⟩ on the given per-mode cutoffs.
    pub fn vacuum(cutoffs: &[usize]) -> Self {
        let len: usize = cutoffs.iter().map(|c| c + 1).product();
        let mut amps = vec![C64::ZERO; len];
        amps[0] = C64::ONE;
        Self::from_parts(cutoffs.to_vec(), amps, 0.0)
    }

    /// Basis state |n₁…n_K⟩.
    pub fn basis(ns: &[usize], cutoffs: &[usize]) -> Result<Self> {
        if ns.len() != cutoffs.len() {
            return Err(Error::InvalidParameter(
                "occupation list and cutoff list differ in length".into(),
            ));
        }
        for (k, (&n, &c)) in ns.iter().zip(cutoffs).enumerate() {
            if n > c {
                return Err(Error::InvalidParameter(format!(
                    "occupation {n} exceeds cutoff {c} on mode {k}"
                )));
            }
        }
        let mut st = Self::vacuum(cutoffs);
        st.amps[0] = C64::ZERO;
        let idx = st.index_of(ns);
        st.amps[idx] = C64::ONE;
        Ok(st)
    }

    pub fn num_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    /// Estimated fraction of probability mass lost to truncation so far.
    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub(crate) fn set_norm_deficit(&mut self, d: f64) {
        self.norm_deficit = d;
    }

    pub(crate) fn index_of(&self, ns: &[usize]) -> usize {
        debug_assert_eq!(ns.len(), self.dims.len());
        ns.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }

    pub fn amplitude(&self, ns: &[usize]) -> C64 {
        self.amps[self.index_of(ns)]
    }

    pub(crate) fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩. Both states must share cutoffs.
    pub fn inner(&self, other: &FockState) -> Result<C64> {
        if self.cutoffs != other.cutoffs {
            return Err(Error::CutoffMismatch(self.cutoffs.clone(), other.cutoffs.clone()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Rescale to unit norm; returns the squared norm that was divided out.
    pub fn normalize(mut self) -> Result<(Self, f64)> {
        let n2 = self.norm_sq();
        if n2 < DEFAULT_HERALD_FLOOR {
            return Err(Error::ZeroState);
        }
        let inv = 1.0 / n2.sqrt();
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok((self, n2))
    }

    /// Kronecker composition: `self`'s modes come first.
    pub fn tensor(&self, other: &FockState) -> FockState {
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.extend_from_slice(&other.cutoffs);
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let d = self.norm_deficit + other.norm_deficit - self.norm_deficit * other.norm_deficit;
        Self::from_parts(cutoffs, amps, d)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            Err(Error::ModeOutOfRange { mode, modes: self.num_modes() })
        } else {
            Ok(())
        }
    }

    fn check_mode_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(Error::EqualModes(i));
        }
        Ok(())
    }

    /// exp[θ(aᵢ†aⱼ − aᵢaⱼ†)], i.e. aᵢ† → cosθ aᵢ† − sinθ aⱼ†,
    /// aⱼ† → cosθ aⱼ† + sinθ aᵢ†. Exact on every total-photon block that fits
    /// under both cutoffs; protruding blocks are applied in full and clipped,
    /// with the clipped mass added to `norm_deficit`.
    pub fn apply_beam_splitter(&self, mode_i: usize, mode_j: usize, theta: f64) -> Result<Self> {
        self.check_mode_pair(mode_i, mode_j)?;
        let blocks =
            BeamSplitterBlocks::new(theta, self.cutoffs[mode_i] + self.cutoffs[mode_j]);
        self.apply_beam_splitter_with(&blocks, mode_i, mode_j)
    }

    /// Beam splitter with precomputed blocks (reusable across circuit runs).
    pub fn apply_beam_splitter_with(
        &self,
        blocks: &BeamSplitterBlocks,
        mode_i: usize,
        mode_j: usize,
    ) -> Result<Self> {
        self.check_mode_pair(mode_i, mode_j)?;
        if blocks.max_total() < self.cutoffs[mode_i] + self.cutoffs[mode_j] {
            return Err(Error::InvalidParameter(
                "beam splitter block table too small for these cutoffs".into(),
            ));
        }
        let mut out = self.clone();
        let before = self.norm_sq();
        let outer = outer_offsets(&self.dims, &self.strides, mode_i, mode_j);
        bs_transform_buffer(
            &mut out.amps,
            &outer,
            self.strides[mode_i],
            self.dims[mode_i],
            self.strides[mode_j],
            self.dims[mode_j],
            blocks,
        );
        if before > 0.0 {
            let after = out.norm_sq();
            out.norm_deficit += ((before - after) / before).max(0.0);
        }
        Ok(out)
    }

    /// Annihilation aᵢ (unnormalized): amp′(…n…) = √(n+1)·amp(…n+1…).
    pub fn apply_annihilation(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let sm = self.strides[mode];
        let dm = self.dims[mode];
        let mut out = self.clone();
        out.amps.iter_mut().for_each(|a| *a = C64::ZERO);
        for (idx, &a) in self.amps.iter().enumerate() {
            let n = (idx / sm) % dm;
            if n >= 1 {
                out.amps[idx - sm] = (n as f64).sqrt() * a;
            }
        }
        Ok(out)
    }

    /// Diagonal attenuation base^(n̂/2) on one mode, so the T^(n̂/2) factor of
    /// a transmittance-T tap is applied directly with `base = T`.
    pub fn apply_exponential_number(&self, mode: usize, base: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(base > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponential-of-number base must be positive, got {base}"
            )));
        }
        let sm = self.strides[mode];
        let dm = self.dims[mode];
        let root = base.sqrt();
        let mut pows = Vec::with_capacity(dm);
        let mut p = 1.0;
        for _ in 0..dm {
            pows.push(p);
            p *= root;
        }
        let mut out = self.clone();
        for (idx, a) in out.amps.iter_mut().enumerate() {
            *a *= pows[(idx / sm) % dm];
        }
        Ok(out)
    }

    /// Diagonal gain base^(n̂/2) with a complex base (principal square root),
    /// for attenuation factors that pick up a phase (imaginary squeezing
    /// rescaling).
    pub fn apply_exponential_number_complex(&self, mode: usize, base: C64) -> Result<Self> {
        self.check_mode(mode)?;
        if !base.re.is_finite() || !base.im.is_finite() || base == C64::ZERO {
            return Err(Error::InvalidParameter(format!(
                "exponential-of-number base must be finite and nonzero, got {base}"
            )));
        }
        let sm = self.strides[mode];
        let dm = self.dims[mode];
        let root = base.sqrt();
        let mut pows = Vec::with_capacity(dm);
        let mut p = C64::new(1.0, 0.0);
        for _ in 0..dm {
            pows.push(p);
            p *= root;
        }
        let mut out = self.clone();
        for (idx, a) in out.amps.iter_mut().enumerate() {
            *a *= pows[(idx / sm) % dm];
        }
        Ok(out)
    }

    /// Unnormalized projection ⟨n|ₘ: returns the state on the remaining modes
    /// and the squared-norm mass of the selected slice.
    pub(crate) fn project_mode_raw(&self, mode: usize, n: usize) -> Result<(FockState, f64)> {
        self.check_mode(mode)?;
        if n > self.cutoffs[mode] {
            return Err(Error::InvalidParameter(format!(
                "herald outcome {n} exceeds cutoff {} on mode {mode}",
                self.cutoffs[mode]
            )));
        }
        if self.num_modes() == 1 {
            // Projecting the only mode leaves a zero-mode "scalar" state; keep
            // a one-element tensor so downstream code stays uniform.
            let amp = self.amps[n];
            let st = FockState::from_parts(vec![0], vec![amp], self.norm_deficit);
            return Ok((st, amp.norm_sqr()));
        }
        let sm = self.strides[mode];
        let dm = self.dims[mode];
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.remove(mode);
        let out_len = self.amps.len() / dm;
        let mut amps = Vec::with_capacity(out_len);
        let mut mass = 0.0;
        for out_idx in 0..out_len {
            let high = out_idx / sm;
            let low = out_idx % sm;
            let a = self.amps[(high * dm + n) * sm + low];
            mass += a.norm_sqr();
            amps.push(a);
        }
        Ok((FockState::from_parts(cutoffs, amps, self.norm_deficit), mass))
    }

    /// Condition on finding exactly `n` photons in `mode`. The input is
    /// assumed normalized; the returned state is normalized and the herald
    /// probability reported alongside.
    pub fn project_mode(&self, mode: usize, n: usize) -> Result<HeraldedResult<FockState>> {
        self.project_mode_with_floor(mode, n, DEFAULT_HERALD_FLOOR)
    }

    pub fn project_mode_with_floor(
        &self,
        mode: usize,
        n: usize,
        floor: f64,
    ) -> Result<HeraldedResult<FockState>> {
        let total = self.norm_sq();
        if total < DEFAULT_HERALD_FLOOR {
            return Err(Error::ZeroState);
        }
        let (raw, mass) = self.project_mode_raw(mode, n)?;
        let probability = mass / total;
        if probability < floor {
            return Err(Error::HeraldImpossible { probability, floor });
        }
        let (state, _) = raw.normalize()?;
        Ok(HeraldedResult {
            state,
            probability,
            norm_deficit: self.norm_deficit,
            herald_pattern: vec![(mode, n)],
        })
    }

    /// Reduced density operator on `keep` (strictly increasing mode list).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let (keep_base, trace_base, kept_cutoffs) = trace_bases(&self.dims, &self.strides, keep)?;
        let dim = keep_base.len();
        let mut mat = DMatrix::<C64>::zeros(dim, dim);
        for e in &trace_base {
            for (col, kb_col) in keep_base.iter().enumerate() {
                let b = self.amps[kb_col + e];
                if b == C64::ZERO {
                    continue;
                }
                for (row, kb_row) in keep_base.iter().enumerate() {
                    mat[(row, col)] += self.amps[kb_row + e] * b.conj();
                }
            }
        }
        Ok(DensityOperator::from_parts(kept_cutoffs, mat, self.norm_deficit))
    }

    pub fn to_density(&self) -> DensityOperator {
        let dim = self.amps.len();
        let mut mat = DMatrix::<C64>::zeros(dim, dim);
        for (col, b) in self.amps.iter().enumerate() {
            if *b == C64::ZERO {
                continue;
            }
            for (row, a) in self.amps.iter().enumerate() {
                mat[(row, col)] = a * b.conj();
            }
        }
        DensityOperator::from_parts(self.cutoffs.clone(), mat, self.norm_deficit)
    }

    /// ⟨n̂ₘ⟩ / ‖ψ‖².
    pub fn mean_photon(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        let sm = self.strides[mode];
        let dm = self.dims[mode];
        let mut num = 0.0;
        let mut den = 0.0;
        for (idx, a) in self.amps.iter().enumerate() {
            let w = a.norm_sqr();
            num += ((idx / sm) % dm) as f64 * w;
            den += w;
        }
        if den <= 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(num / den)
    }

    /// Total mean photon number across all modes.
    pub fn mean_photon_total(&self) -> Result<f64> {
        (0..self.num_modes()).map(|m| self.mean_photon(m)).sum()
    }
}

fn outer_offsets(dims: &[usize], strides: &[usize], i: usize, j: usize) -> Vec<usize> {
    let len: usize = dims.iter().product();
    let (si, di, sj, dj) = (strides[i], dims[i], strides[j], dims[j]);
    let mut out = Vec::with_capacity(len / (di * dj));
    for idx in 0..len {
        if (idx / si) % di == 0 && (idx / sj) % dj == 0 {
            out.push(idx);
        }
    }
    out
}

fn trace_bases(
    dims: &[usize],
    strides: &[usize],
    keep: &[usize],
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadKeepList);
    }
    if *keep.last().unwrap() >= dims.len() {
        return Err(Error::ModeOutOfRange { mode: *keep.last().unwrap(), modes: dims.len() });
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|m| !keep.contains(m)).collect();
    let enumerate = |modes: &[usize]| -> Vec<usize> {
        let mut bases = vec![0usize];
        for &m in modes {
            let mut next = Vec::with_capacity(bases.len() * dims[m]);
            for b in &bases {
                for n in 0..dims[m] {
                    next.push(b + n * strides[m]);
                }
            }
            bases = next;
        }
        bases
    };
    let kept_cutoffs = keep.iter().map(|&m| dims[m] - 1).collect();
    Ok((enumerate(keep), enumerate(&traced), kept_cutoffs))
}

// ---------------------------------------------------------------------------
// Beam splitter blocks
// ---------------------------------------------------------------------------

/// Per-total-photon-number orthogonal blocks of a two-mode beam splitter.
/// Block N maps the vector of amplitudes over (nᵢ = k, nⱼ = N−k), k = 0…N.
pub struct BeamSplitterBlocks {
    blocks: Vec<DMatrix<f64>>,
}

impl BeamSplitterBlocks {
    pub fn new(theta: f64, max_total: usize) -> Self {
        let mut blocks = Vec::with_capacity(max_total + 1);
        for n in 0..=max_total {
            blocks.push(bs_block(theta, n));
        }
        BeamSplitterBlocks { blocks }
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    fn block(&self, n: usize) -> &DMatrix<f64> {
        &self.blocks[n]
    }
}

/// Exact (N+1)-dimensional block of exp[θ(aᵢ†aⱼ − aᵢaⱼ†)].
///
/// The generator restricted to the block is antisymmetric tridiagonal with
/// subdiagonal θ√((k+1)(N−k)). Conjugating by D = diag(iᵏ) yields i·T with T
/// real symmetric tridiagonal, so exp = D⁻¹·Q e^{iΛ} Qᵀ·D, which is real.
fn bs_block(theta: f64, n: usize) -> DMatrix<f64> {
    let dim = n + 1;
    if n == 0 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let mut t = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..n {
        let g = theta * (((k + 1) * (n - k)) as f64).sqrt();
        t[(k, k + 1)] = g;
        t[(k + 1, k)] = g;
    }
    let eig = nalgebra::SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let phases: Vec<C64> = lam.iter().map(|&l| C64::new(l.cos(), l.sin())).collect();
    let ipow = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    let mut out = DMatrix::<f64>::zeros(dim, dim);
    for m in 0..dim {
        for nn in 0..dim {
            let mut s = C64::ZERO;
            for qi in 0..dim {
                s += q[(m, qi)] * q[(nn, qi)] * phases[qi];
            }
            // i^(nn−m) == i^((nn + 3m) mod 4) since i^4 = 1 and i^(−1) = i^3
            let val = ipow[(nn + 3 * m) % 4] * s;
            debug_assert!(val.im.abs() < 1e-10, "beam splitter block not real: {val}");
            out[(m, nn)] = val.re;
        }
    }
    out
}

fn bs_transform_buffer(
    buf: &mut [C64],
    outer: &[usize],
    si: usize,
    di: usize,
    sj: usize,
    dj: usize,
    blocks: &BeamSplitterBlocks,
) {
    let max_total = (di - 1) + (dj - 1);
    let mut gather = vec![C64::ZERO; max_total + 1];
    let mut scatter = vec![C64::ZERO; max_total + 1];
    for &o in outer {
        for nt in 0..=max_total {
            let kmin = nt.saturating_sub(dj - 1);
            let kmax = nt.min(di - 1);
            let b = blocks.block(nt);
            for k in kmin..=kmax {
                gather[k] = buf[o + k * si + (nt - k) * sj];
            }
            for m in kmin..=kmax {
                let mut acc = C64::ZERO;
                for k in kmin..=kmax {
                    acc += b[(m, k)] * gather[k];
                }
                scatter[m] = acc;
            }
            for m in kmin..=kmax {
                buf[o + m * si + (nt - m) * sj] = scatter[m];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Density operators
// ---------------------------------------------------------------------------

/// Multimode density operator over the flattened truncated Fock basis.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    cutoffs: Vec<usize>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    mat: DMatrix<C64>,
    trace_deficit: f64,
}

impl DensityOperator {
    pub(crate) fn from_parts(cutoffs: Vec<usize>, mat: DMatrix<C64>, trace_deficit: f64) -> Self {
        let dims: Vec<usize> = cutoffs.iter().map(|c| c + 1).collect();
        let strides = strides_for(&dims);
        debug_assert_eq!(mat.nrows(), dims.iter().product::<usize>());
        debug_assert_eq!(mat.ncols(), mat.nrows());
        DensityOperator { cutoffs, dims, strides, mat, trace_deficit }
    }

    pub fn num_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Estimated fraction of the true mixture's mass lost to truncation.
    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub(crate) fn set_trace_deficit(&mut self, d: f64) {
        self.trace_deficit = d;
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.mat
    }

    pub(crate) fn flat_index(&self, ns: &[usize]) -> usize {
        debug_assert_eq!(ns.len(), self.dims.len());
        ns.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }

    /// ⟨bra|ρ|ket⟩ with multi-indices.
    pub fn element(&self, bra: &[usize], ket: &[usize]) -> C64 {
        self.mat[(self.flat_index(bra), self.flat_index(ket))]
    }

    pub fn trace(&self) -> f64 {
        let tr: C64 = self.mat.diagonal().iter().sum();
        tr.re
    }

    pub fn normalize(mut self) -> Result<(Self, f64)> {
        let tr = self.trace();
        if tr < DEFAULT_HERALD_FLOOR {
            return Err(Error::ZeroState);
        }
        self.mat /= C64::new(tr, 0.0);
        Ok((self, tr))
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.extend_from_slice(&other.cutoffs);
        let mat = self.mat.kronecker(&other.mat);
        let d = self.trace_deficit + other.trace_deficit
            - self.trace_deficit * other.trace_deficit;
        DensityOperator::from_parts(cutoffs, mat, d)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            Err(Error::ModeOutOfRange { mode, modes: self.num_modes() })
        } else {
            Ok(())
        }
    }

    /// UρU† for the same block-exact beam splitter as on pure states. The
    /// blocks are real orthogonal, so the right factor U† = Uᵀ is applied by
    /// running the same transform over rows.
    pub fn apply_beam_splitter(&self, mode_i: usize, mode_j: usize, theta: f64) -> Result<Self> {
        self.check_mode(mode_i)?;
        self.check_mode(mode_j)?;
        if mode_i == mode_j {
            return Err(Error::EqualModes(mode_i));
        }
        let blocks = BeamSplitterBlocks::new(theta, self.cutoffs[mode_i] + self.cutoffs[mode_j]);
        let outer = outer_offsets(&self.dims, &self.strides, mode_i, mode_j);
        let (si, di) = (self.strides[mode_i], self.dims[mode_i]);
        let (sj, dj) = (self.strides[mode_j], self.dims[mode_j]);
        let dim = self.dim();
        let before = self.trace();
        let mut out = self.clone();
        // Left factor: every column is a state vector over the same lattice.
        for c in 0..dim {
            let col = &mut out.mat.as_mut_slice()[c * dim..(c + 1) * dim];
            bs_transform_buffer(col, &outer, si, di, sj, dj, &blocks);
        }
        // Right factor: rows transform with the same real blocks.
        let mut row = vec![C64::ZERO; dim];
        for r in 0..dim {
            for c in 0..dim {
                row[c] = out.mat[(r, c)];
            }
            bs_transform_buffer(&mut row, &outer, si, di, sj, dj, &blocks);
            for c in 0..dim {
                out.mat[(r, c)] = row[c];
            }
        }
        if before > 0.0 {
            let after = out.trace();
            out.trace_deficit += ((before - after) / before).max(0.0);
        }
        Ok(out)
    }

    /// L ρ R† where L and R are single-mode operators (dₘ×dₘ matrices in the
    /// Fock basis of `mode`). Used for measurement operators and Kraus sums.
    pub fn sandwich_one_mode(
        &self,
        mode: usize,
        left: &DMatrix<C64>,
        right: &DMatrix<C64>,
    ) -> Result<Self> {
        self.check_mode(mode)?;
        let dm = self.dims[mode];
        if left.nrows() != dm || left.ncols() != dm || right.nrows() != dm || right.ncols() != dm {
            return Err(Error::InvalidParameter(
                "single-mode operator dimension does not match the mode cutoff".into(),
            ));
        }
        let sm = self.strides[mode];
        let dim = self.dim();
        let len = dim;
        // Apply L on the left: transform the mode index of every column.
        let mut tmp = DMatrix::<C64>::zeros(dim, dim);
        for c in 0..dim {
            for idx in 0..len {
                let n = (idx / sm) % dm;
                let a = self.mat[(idx, c)];
                if a == C64::ZERO {
                    continue;
                }
                for np in 0..dm {
                    let l = left[(np, n)];
                    if l != C64::ZERO {
                        let out_idx = idx - n * sm + np * sm;
                        tmp[(out_idx, c)] += l * a;
                    }
                }
            }
        }
        // Apply R† on the right: column indices transform with conj(R).
        let mut out_mat = DMatrix::<C64>::zeros(dim, dim);
        for r in 0..dim {
            for idx in 0..len {
                let n = (idx / sm) % dm;
                let a = tmp[(r, idx)];
                if a == C64::ZERO {
                    continue;
                }
                for np in 0..dm {
                    let rc = right[(np, n)].conj();
                    if rc != C64::ZERO {
                        let out_idx = idx - n * sm + np * sm;
                        out_mat[(r, out_idx)] += a * rc;
                    }
                }
            }
        }
        Ok(DensityOperator::from_parts(self.cutoffs.clone(), out_mat, self.trace_deficit))
    }

    pub(crate) fn project_mode_raw(&self, mode: usize, n: usize) -> Result<(DensityOperator, f64)> {
        self.check_mode(mode)?;
        if n > self.cutoffs[mode] {
            return Err(Error::InvalidParameter(format!(
                "herald outcome {n} exceeds cutoff {} on mode {mode}",
                self.cutoffs[mode]
            )));
        }
        let sm = self.strides[mode];
        let dm = self.dims[mode];
        let mut cutoffs = self.cutoffs.clone();
        if self.num_modes() == 1 {
            cutoffs = vec![0];
            let v = self.mat[(n, n)];
            let mat = DMatrix::from_element(1, 1, v);
            return Ok((DensityOperator::from_parts(cutoffs, mat, self.trace_deficit), v.re));
        }
        cutoffs.remove(mode);
        let out_dim = self.dim() / dm;
        let pick = |out_idx: usize| -> usize {
            let high = out_idx / sm;
            let low = out_idx % sm;
            (high * dm + n) * sm + low
        };
        let mut mat = DMatrix::<C64>::zeros(out_dim, out_dim);
        for c in 0..out_dim {
            let ic = pick(c);
            for r in 0..out_dim {
                mat[(r, c)] = self.mat[(pick(r), ic)];
            }
        }
        let op = DensityOperator::from_parts(cutoffs, mat, self.trace_deficit);
        let mass = op.trace();
        Ok((op, mass))
    }

    pub fn project_mode(&self, mode: usize, n: usize) -> Result<HeraldedResult<DensityOperator>> {
        self.project_mode_with_floor(mode, n, DEFAULT_HERALD_FLOOR)
    }

    pub fn project_mode_with_floor(
        &self,
        mode: usize,
        n: usize,
        floor: f64,
    ) -> Result<HeraldedResult<DensityOperator>> {
        let total = self.trace();
        if total < DEFAULT_HERALD_FLOOR {
            return Err(Error::ZeroState);
        }
        let (raw, mass) = self.project_mode_raw(mode, n)?;
        let probability = mass / total;
        if probability < floor {
            return Err(Error::HeraldImpossible { probability, floor });
        }
        let (state, _) = raw.normalize()?;
        Ok(HeraldedResult {
            state,
            probability,
            norm_deficit: self.trace_deficit,
            herald_pattern: vec![(mode, n)],
        })
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let (keep_base, trace_base, kept_cutoffs) = trace_bases(&self.dims, &self.strides, keep)?;
        let dim = keep_base.len();
        let mut mat = DMatrix::<C64>::zeros(dim, dim);
        for e in &trace_base {
            for (col, kb_col) in keep_base.iter().enumerate() {
                for (row, kb_row) in keep_base.iter().enumerate() {
                    mat[(row, col)] += self.mat[(kb_row + e, kb_col + e)];
                }
            }
        }
        Ok(DensityOperator::from_parts(kept_cutoffs, mat, self.trace_deficit))
    }

    /// Hermitian eigendecomposition into weighted pure components, dropping
    /// relative weights below `floor`. Returns the kept (weight, state) pairs
    /// sorted by descending weight and the discarded relative mass.
    pub fn eigen_pure_components(&self, floor: f64) -> Result<(Vec<(f64, FockState)>, f64)> {
        let tr = self.trace();
        if tr < DEFAULT_HERALD_FLOOR {
            return Err(Error::ZeroState);
        }
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(herm);
        let mut comps: Vec<(f64, FockState)> = Vec::new();
        let mut kept_mass = 0.0;
        for (k, &w) in eig.eigenvalues.iter().enumerate() {
            if w > floor * tr {
                let col: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
                comps.push((
                    w,
                    FockState::from_parts(self.cutoffs.clone(), col, self.trace_deficit),
                ));
                kept_mass += w;
            }
        }
        comps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let discarded = ((tr - kept_mass) / tr).max(0.0);
        Ok((comps, discarded))
    }

    pub fn mean_photon(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        let sm = self.strides[mode];
        let dm = self.dims[mode];
        let mut num = 0.0;
        let mut den = 0.0;
        for idx in 0..self.dim() {
            let w = self.mat[(idx, idx)].re;
            num += ((idx / sm) % dm) as f64 * w;
            den += w;
        }
        if den <= 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(num / den)
    }

    pub fn mean_photon_total(&self) -> Result<f64> {
        (0..self.num_modes()).map(|m| self.mean_photon(m)).sum()
    }

    /// Restore exact Hermiticity after long Kraus/projection chains.
    pub fn hermitize(mut self) -> Self {
        let h = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        self.mat = h;
        self
    }
}

// ---------------------------------------------------------------------------
// Pure-or-mixed wrapper
// ---------------------------------------------------------------------------

/// A state that is either a pure amplitude tensor or a density operator.
/// Circuits stay in whichever representation the inputs arrived in.
#[derive(Debug, Clone)]
pub enum State {
    Pure(FockState),
    Mixed(DensityOperator),
}

impl From<FockState> for State {
    fn from(s: FockState) -> Self {
        State::Pure(s)
    }
}

impl From<DensityOperator> for State {
    fn from(s: DensityOperator) -> Self {
        State::Mixed(s)
    }
}

impl State {
    pub fn is_pure(&self) -> bool {
        matches!(self, State::Pure(_))
    }

    pub fn num_modes(&self) -> usize {
        match self {
            State::Pure(s) => s.num_modes(),
            State::Mixed(s) => s.num_modes(),
        }
    }

    pub fn cutoffs(&self) -> &[usize] {
        match self {
            State::Pure(s) => s.cutoffs(),
            State::Mixed(s) => s.cutoffs(),
        }
    }

    /// Truncation-loss estimate (norm or trace deficit).
    pub fn deficit(&self) -> f64 {
        match self {
            State::Pure(s) => s.norm_deficit(),
            State::Mixed(s) => s.trace_deficit(),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            State::Pure(s) => s.to_density(),
            State::Mixed(s) => s.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&FockState> {
        match self {
            State::Pure(s) => Some(s),
            State::Mixed(_) => None,
        }
    }

    pub fn as_mixed(&self) -> Option<&DensityOperator> {
        match self {
            State::Mixed(s) => Some(s),
            State::Pure(_) => None,
        }
    }

    /// Tensor product of like kinds; mixing pure with mixed is an error so
    /// callers convert explicitly instead of paying a silent representation
    /// change.
    pub fn tensor(&self, other: &State) -> Result<State> {
        match (self, other) {
            (State::Pure(a), State::Pure(b)) => Ok(State::Pure(a.tensor(b))),
            (State::Mixed(a), State::Mixed(b)) => Ok(State::Mixed(a.tensor(b))),
            _ => Err(Error::KindMismatch),
        }
    }

    pub fn apply_beam_splitter(&self, i: usize, j: usize, theta: f64) -> Result<State> {
        match self {
            State::Pure(s) => Ok(State::Pure(s.apply_beam_splitter(i, j, theta)?)),
            State::Mixed(s) => Ok(State::Mixed(s.apply_beam_splitter(i, j, theta)?)),
        }
    }

    pub fn project_mode(&self, mode: usize, n: usize) -> Result<HeraldedResult<State>> {
        match self {
            State::Pure(s) => Ok(s.project_mode(mode, n)?.map(State::Pure)),
            State::Mixed(s) => Ok(s.project_mode(mode, n)?.map(State::Mixed)),
        }
    }

    pub fn normalize(self) -> Result<(State, f64)> {
        match self {
            State::Pure(s) => s.normalize().map(|(s, w)| (State::Pure(s), w)),
            State::Mixed(s) => s.normalize().map(|(s, w)| (State::Mixed(s), w)),
        }
    }

    pub fn mean_photon_total(&self) -> Result<f64> {
        match self {
            State::Pure(s) => s.mean_photon_total(),
            State::Mixed(s) => s.mean_photon_total(),
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        match self {
            State::Pure(s) => s.partial_trace(keep),
            State::Mixed(s) => s.partial_trace(keep),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRAC_PI_4: f64 = std::f64::consts::FRAC_PI_4;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() < tol, "{what}: {a} vs {b} (diff {})", (a - b).abs());
    }

    #[test]
    fn vacuum_is_normalized_and_stable_under_beam_splitter() {
        let v = FockState::vacuum(&[5, 5]);
        assert_close(v.norm_sq(), 1.0, 1e-15, "vacuum norm");
        let out = v.apply_beam_splitter(0, 1, 0.7).unwrap();
        assert_close(out.amplitude(&[0, 0]).re, 1.0, 1e-12, "vacuum fixed by BS");
        assert_close(out.norm_deficit(), 0.0, 1e-15, "no clipping on vacuum");
    }

    #[test]
    fn single_photon_beam_splitter_convention() {
        // |1,0⟩ → cosθ|1,0⟩ − sinθ|0,1⟩
        let s = FockState::basis(&[1, 0], &[3, 3]).unwrap();
        let out = s.apply_beam_splitter(0, 1, FRAC_PI_4).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(out.amplitude(&[1, 0]).re, r, 1e-12, "kept amplitude");
        assert_close(out.amplitude(&[0, 1]).re, -r, 1e-12, "swapped amplitude sign");
    }

    #[test]
    fn hong_ou_mandel_interference() {
        let s = FockState::basis(&[1, 1], &[4, 4]).unwrap();
        let out = s.apply_beam_splitter(0, 1, FRAC_PI_4).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(out.amplitude(&[1, 1]).norm() < 1e-12, "coincidence term cancels");
        assert_close(out.amplitude(&[2, 0]).re, r, 1e-12, "bunching up");
        assert_close(out.amplitude(&[0, 2]).re, -r, 1e-12, "bunching down");
    }

    #[test]
    fn beam_splitter_blocks_conserve_total_photon_number() {
        let mut s = FockState::vacuum(&[4, 4]);
        // Arbitrary state with support on several blocks.
        let entries = [([0usize, 0usize], 0.5), ([1, 1], 0.3), ([2, 0], 0.4), ([1, 2], 0.2)];
        for (ns, v) in entries {
            let idx = s.index_of(&ns);
            s.amps_mut()[idx] = C64::new(v, 0.1 * v);
        }
        let block_mass = |st: &FockState, n: usize| -> f64 {
            (0..=n)
                .filter(|&k| k <= 4 && n - k <= 4)
                .map(|k| st.amplitude(&[k, n - k]).norm_sqr())
                .sum()
        };
        let out = s.apply_beam_splitter(0, 1, 0.9).unwrap();
        for n in 0..=4 {
            assert_close(block_mass(&out, n), block_mass(&s, n), 1e-12, "block mass");
        }
    }

    #[test]
    fn beam_splitter_is_unitary_when_support_fits() {
        // Support bounded so every populated block fits under both cutoffs.
        let mut s = FockState::vacuum(&[6, 6]);
        for (ns, v) in [([0usize, 2usize], 0.8), ([3, 1], -0.4), ([2, 2], 0.3)] {
            let idx = s.index_of(&ns);
            s.amps_mut()[idx] = C64::new(v, v / 3.0);
        }
        let n0 = s.norm_sq();
        let out = s.apply_beam_splitter(0, 1, 1.234).unwrap();
        assert_close(out.norm_sq(), n0, 1e-12, "norm preserved");
        assert_close(out.norm_deficit(), 0.0, 1e-15, "no deficit");
        // And clipping shows up when the support pokes past a cutoff.
        let mut hot = FockState::vacuum(&[2, 2]);
        let idx = hot.index_of(&[2, 2]);
        hot.amps_mut()[idx] = C64::ONE;
        let clipped = hot.apply_beam_splitter(0, 1, FRAC_PI_4).unwrap();
        assert!(clipped.norm_deficit() > 0.1, "clipping recorded in deficit");
    }

    #[test]
    fn annihilation_shifts_and_scales() {
        let s = FockState::basis(&[2, 0], &[3, 3]).unwrap();
        let out = s.apply_annihilation(0).unwrap();
        assert_close(out.amplitude(&[1, 0]).re, 2f64.sqrt(), 1e-14, "sqrt(n) factor");
        let vac = FockState::vacuum(&[2]);
        let dead = vac.apply_annihilation(0).unwrap();
        assert_close(dead.norm_sq(), 0.0, 1e-300, "vacuum annihilates to zero");
    }

    #[test]
    fn exponential_number_operator_is_diagonal_gain() {
        let s = FockState::basis(&[2], &[4]).unwrap();
        let out = s.apply_exponential_number(0, 0.64).unwrap();
        assert_close(out.amplitude(&[2]).re, 0.64, 1e-14, "0.64^(2/2) on |2⟩");
        let three = FockState::basis(&[3], &[4]).unwrap();
        let odd = three.apply_exponential_number(0, 0.25).unwrap();
        assert_close(odd.amplitude(&[3]).re, 0.125, 1e-14, "0.25^(3/2) on |3⟩");
        let id = s.apply_exponential_number(0, 1.0).unwrap();
        assert_close(id.amplitude(&[2]).re, 1.0, 1e-15, "base 1 is identity");
        assert!(
            s.apply_exponential_number(0, 0.0).is_err(),
            "nonpositive base must be rejected"
        );
    }

    #[test]
    fn projection_heralds_and_renormalizes() {
        // Two-mode correlated state: project mode 1 on |1⟩.
        let mut s = FockState::vacuum(&[2, 2]);
        for (ns, v) in [([0usize, 0usize], 0.8), ([1, 1], 0.6)] {
            let idx = s.index_of(&ns);
            s.amps_mut()[idx] = C64::new(v, 0.0);
        }
        let h = s.project_mode(1, 1).unwrap();
        assert_close(h.probability, 0.36, 1e-14, "herald probability");
        assert_close(h.state.amplitude(&[1]).re, 1.0, 1e-14, "collapsed state");
        assert_eq!(h.herald_pattern, vec![(1, 1)]);
        let err = s.project_mode(1, 2).unwrap_err();
        assert!(matches!(err, Error::HeraldImpossible { .. }));
    }

    #[test]
    fn partial_trace_of_product_recovers_factors() {
        let mut a = FockState::vacuum(&[2]);
        a.amps_mut()[0] = C64::new(0.6, 0.0);
        a.amps_mut()[1] = C64::new(0.0, 0.8);
        let b = FockState::basis(&[1], &[2]).unwrap();
        let joint = a.tensor(&b);
        let rho_a = joint.partial_trace(&[0]).unwrap();
        let direct = a.to_density();
        for r in 0..3 {
            for c in 0..3 {
                let d = (rho_a.matrix()[(r, c)] - direct.matrix()[(r, c)]).norm();
                assert!(d < 1e-14, "partial trace mismatch at ({r},{c})");
            }
        }
        assert_close(rho_a.trace(), 1.0, 1e-14, "reduced trace");
    }

    #[test]
    fn density_beam_splitter_matches_pure_conjugation() {
        let mut s = FockState::vacuum(&[3, 3]);
        for (ns, v) in [([0usize, 1usize], 0.7), ([2, 1], 0.5), ([1, 0], -0.3)] {
            let idx = s.index_of(&ns);
            s.amps_mut()[idx] = C64::new(v, 0.2 * v);
        }
        let theta = 0.6;
        let pure_out = s.apply_beam_splitter(0, 1, theta).unwrap().to_density();
        let dens_out = s.to_density().apply_beam_splitter(0, 1, theta).unwrap();
        let diff = (pure_out.matrix() - dens_out.matrix()).norm();
        assert!(diff < 1e-12, "density conjugation mismatch: {diff}");
    }

    #[test]
    fn eigen_components_rebuild_the_operator() {
        let a = FockState::basis(&[0], &[2]).unwrap();
        let b = FockState::basis(&[1], &[2]).unwrap();
        let mut mat = a.to_density().matrix() * C64::new(0.75, 0.0);
        mat += b.to_density().matrix() * C64::new(0.25, 0.0);
        let rho = DensityOperator::from_parts(vec![2], mat, 0.0);
        let (comps, discarded) = rho.eigen_pure_components(1e-12).unwrap();
        assert_eq!(comps.len(), 2);
        assert!(discarded < 1e-12);
        let rebuilt = comps.iter().fold(DMatrix::<C64>::zeros(3, 3), |acc, (w, psi)| {
            acc + psi.to_density().matrix() * C64::new(*w, 0.0)
        });
        assert!((rebuilt - rho.matrix()).norm() < 1e-12);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let p = State::Pure(FockState::vacuum(&[2]));
        let m = State::Mixed(FockState::vacuum(&[2]).to_density());
        assert!(matches!(p.tensor(&m), Err(Error::KindMismatch)));
        assert!(p.tensor(&p).is_ok());
    }

    #[test]
    fn mode_bounds_are_checked() {
        let s = FockState::vacuum(&[2, 2]);
        assert!(matches!(
            s.apply_beam_splitter(0, 2, 0.1),
            Err(Error::ModeOutOfRange { mode: 2, modes: 2 })
        ));
        assert!(matches!(s.apply_beam_splitter(1, 1, 0.1), Err(Error::EqualModes(1))));
        assert!(matches!(s.partial_trace(&[]), Err(Error::BadKeepList)));
    }
}
