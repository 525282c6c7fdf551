//! Quantum channels in Kraus form and channel sequences.

use std::fmt;
use std::sync::Arc;

use crate::entropy::{quantum_mutual_information, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::operator::{
    purify, trace_norm_distance, CMatrix, DensityOperator, HermitianOperator, PositiveOperator, C64,
};

/// Allowed `‖Σ K*K − I‖_F` for a trace-preserving Kraus family.
pub const TP_TOL: f64 = 1e-9;

/// A completely positive trace-preserving map `C^{d_in} → C^{d_out}` given by Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMatrix>,
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl Channel {
    pub fn from_kraus(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidArgument("empty Kraus family".into()))?;
        let (d_out, d_in) = first.shape();
        if d_in == 0 || d_out == 0 {
            return Err(Error::InvalidArgument("Kraus operators must be non-empty".into()));
        }
        for k in &kraus {
            if k.shape() != (d_out, d_in) {
                return Err(Error::InvalidArgument(format!(
                    "Kraus operator of shape {}x{} in a {d_out}x{d_in} family",
                    k.nrows(),
                    k.ncols()
                )));
            }
            if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let ch = Self { d_in, d_out, kraus };
        let deficit = ch.tp_deficit();
        if deficit > TP_TOL {
            return Err(Error::NotTracePreserving { deficit });
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self { d_in: d, d_out: d, kraus: vec![CMatrix::identity(d, d)] }
    }

    /// `ρ ↦ UρU*`; `U` must be an isometry.
    pub fn isometry(u: CMatrix) -> Result<Self> {
        Self::from_kraus(vec![u])
    }

    /// `ρ ↦ (1 − p)ρ + p·Tr ρ·I/d`, written with the `d²` Weyl operators `X^a Z^b`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("depolarizing parameter {p} outside [0, 1]")));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let d2 = (d * d) as f64;
        let mut kraus = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let w = if a == 0 && b == 0 { 1.0 - p + p / d2 } else { p / d2 };
                if w == 0.0 {
                    continue;
                }
                let omega = 2.0 * std::f64::consts::PI / d as f64;
                // (X^a Z^b)|j⟩ = ω^{bj} |j + a⟩
                let mut k = CMatrix::zeros(d, d);
                for j in 0..d {
                    k[((j + a) % d, j)] = C64::from_polar(w.sqrt(), omega * (b * j) as f64);
                }
                kraus.push(k);
            }
        }
        Self::from_kraus(kraus)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `‖Σ K*K − I‖_F`.
    pub fn tp_deficit(&self) -> f64 {
        let mut s = CMatrix::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        frobenius(&(s - CMatrix::identity(self.d_in, self.d_in)))
    }

    fn check_input(&self, dim: usize) -> Result<()> {
        if dim != self.d_in {
            return Err(Error::DimensionMismatch { expected: self.d_in, actual: dim });
        }
        Ok(())
    }

    /// `Σ K X K*` on a Hermitian input.
    pub fn apply_hermitian(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        self.check_input(x.dim())?;
        let xd = x.dense();
        let mut out = CMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += k * xd.as_ref() * k.adjoint();
        }
        HermitianOperator::new(out)
    }

    pub fn apply(&self, rho: &PositiveOperator) -> Result<PositiveOperator> {
        PositiveOperator::new(self.apply_hermitian(rho.op())?)
    }

    /// A linearly independent Kraus family for the same channel, obtained from
    /// the eigendecomposition of the Gram matrix `G_kl = Tr K_k* K_l`.
    pub fn reduced_kraus(&self) -> Vec<CMatrix> {
        let r = self.kraus.len();
        let gram = CMatrix::from_fn(r, r, |k, l| self.kraus[k].dotc(&self.kraus[l]));
        let g = PositiveOperator::new(HermitianOperator::new(gram).expect("Gram matrix is Hermitian"))
            .expect("Gram matrix is positive");
        let keep = g.rank(None);
        (0..keep)
            .map(|j| {
                let u = g.spectrum().vector(j);
                let mut l = CMatrix::zeros(self.d_out, self.d_in);
                for (k, kr) in self.kraus.iter().enumerate() {
                    l += kr * u[k];
                }
                l
            })
            .collect()
    }

    /// Number of linearly independent Kraus operators (the rank of the Choi matrix).
    pub fn choi_rank(&self) -> usize {
        self.reduced_kraus().len()
    }

    /// `(Φ ⊗ Id)(|Ω⟩⟨Ω|)` with `|Ω⟩ = Σ_i |i⟩|i⟩`; output factor first.
    pub fn choi_matrix(&self) -> Result<PositiveOperator> {
        let n = self.d_out * self.d_in;
        let mut c = CMatrix::zeros(n, n);
        for k in &self.kraus {
            let v = CMatrix::from_fn(n, 1, |idx, _| k[(idx / self.d_in, idx % self.d_in)]);
            c += &v * v.adjoint();
        }
        PositiveOperator::from_dense(c)
    }

    /// The channel to the environment of the minimal Stinespring dilation.
    pub fn complementary(&self) -> Result<Channel> {
        let reduced = self.reduced_kraus();
        let r = reduced.len();
        let kraus = (0..self.d_out).map(|a| CMatrix::from_fn(r, self.d_in, |k, i| reduced[k][(a, i)])).collect();
        Channel::from_kraus(kraus)
    }

    /// `then ∘ self`, with a reduced Kraus family.
    pub fn compose(&self, then: &Channel) -> Result<Channel> {
        if then.d_in != self.d_out {
            return Err(Error::DimensionMismatch { expected: self.d_out, actual: then.d_in });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * then.kraus.len());
        for l in &then.kraus {
            for k in &self.kraus {
                kraus.push(l * k);
            }
        }
        let raw = Channel { d_in: self.d_in, d_out: then.d_out, kraus };
        Channel::from_kraus(raw.reduced_kraus())
    }

    /// `(Φ ⊗ Id_R)(ρ̂)` for the eigenbasis purification `ρ̂` of `ρ`, with `dim R = rank ρ`.
    pub fn extended_output(&self, rho: &PositiveOperator) -> Result<(PositiveOperator, usize)> {
        self.check_input(rho.dim())?;
        let pur = purify(rho);
        let r = pur.env_dim;
        let psi = pur.as_matrix();
        let n = self.d_out * r;
        let mut out = CMatrix::zeros(n, n);
        for k in &self.kraus {
            let w = k * &psi;
            let v = CMatrix::from_fn(n, 1, |idx, _| w[(idx / r, idx % r)]);
            out += &v * v.adjoint();
        }
        Ok((PositiveOperator::from_dense(out)?, r))
    }

    /// `I(Φ, ρ) = I(B:R)` of `(Φ ⊗ Id_R)(ρ̂)`. Homogeneous of degree one in `ρ`.
    pub fn mutual_information(&self, rho: &PositiveOperator) -> Result<f64> {
        let (out, r) = self.extended_output(rho)?;
        quantum_mutual_information(&out, self.d_out, r)
    }

    /// `I_c(Φ, ρ) = I(Φ, ρ) − S(ρ)`.
    pub fn coherent_information(&self, rho: &PositiveOperator) -> Result<f64> {
        Ok(self.mutual_information(rho)? - von_neumann_entropy(rho))
    }

    /// `S(Φ(ρ))`.
    pub fn output_entropy(&self, rho: &PositiveOperator) -> Result<f64> {
        Ok(von_neumann_entropy(&self.apply(rho)?))
    }
}

type ChannelGenerator = dyn Fn(usize) -> Result<Channel> + Send + Sync;

/// An indexed family `n ↦ Φ_n`; index 0 is the declared limit.
#[derive(Clone)]
pub struct ChannelSequence {
    d_in: usize,
    d_out: usize,
    label: String,
    generator: Arc<ChannelGenerator>,
}

impl fmt::Debug for ChannelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelSequence")
            .field("label", &self.label)
            .field("d_in", &self.d_in)
            .field("d_out", &self.d_out)
            .finish()
    }
}

impl ChannelSequence {
    pub fn from_fn(
        d_in: usize,
        d_out: usize,
        label: impl Into<String>,
        f: impl Fn(usize) -> Result<Channel> + Send + Sync + 'static,
    ) -> Self {
        Self { d_in, d_out, label: label.into(), generator: Arc::new(f) }
    }

    pub fn constant(ch: Channel, label: impl Into<String>) -> Self {
        let (d_in, d_out) = (ch.d_in, ch.d_out);
        Self::from_fn(d_in, d_out, label, move |_| Ok(ch.clone()))
    }

    /// `Φ_n` depolarizing with parameter `min(1, scale/n)`; `Φ_0` is the identity.
    pub fn depolarizing(d: usize, scale: f64) -> Self {
        Self::from_fn(d, d, format!("depolarizing(d={d}, p_n={scale}/n)"), move |n| {
            if n == 0 {
                Ok(Channel::identity(d))
            } else {
                Channel::depolarizing(d, (scale / n as f64).min(1.0))
            }
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `Φ_n`, checked against the declared dimensions.
    pub fn get(&self, n: usize) -> Result<Channel> {
        let ch = (self.generator)(n)?;
        if ch.d_in != self.d_in || ch.d_out != self.d_out {
            return Err(Error::DimensionMismatch { expected: self.d_in * self.d_out, actual: ch.d_in * ch.d_out });
        }
        Ok(ch)
    }
}

/// `‖Φ_n(ρ) − Φ_0(ρ)‖₁` for each probe (rows) and `n = 1..=n_max` (columns).
pub fn strong_convergence_probe(
    seq: &ChannelSequence,
    probes: &[DensityOperator],
    n_max: usize,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    let limit = seq.get(0)?;
    let channels = try_map_range(exec, n_max, |i| seq.get(i + 1))?;
    let limits = probes.iter().map(|p| limit.apply_hermitian(p.op())).collect::<Result<Vec<_>>>()?;
    let cells = try_map_range(exec, probes.len() * n_max, |idx| {
        let (p, i) = (idx / n_max, idx % n_max);
        let out = channels[i].apply_hermitian(probes[p].op())?;
        trace_norm_distance(&out, &limits[p])
    })?;
    Ok(cells.chunks(n_max.max(1)).map(<[f64]>::to_vec).take(probes.len()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{partial_trace, Subsystem};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn depolarizing_qubit_matches_pauli_form() {
        let ch = Channel::depolarizing(2, 0.4).unwrap();
        assert_eq!(ch.kraus().len(), 4);
        assert!(ch.tp_deficit() < 1e-14);
        let rho = DensityOperator::basis_state(2, 0);
        let out = ch.apply(&rho).unwrap();
        assert_abs_diff_eq!(out.op().entry(0, 0).re, 0.8, epsilon = 1e-14);
        let full = Channel::depolarizing(2, 1.0).unwrap();
        let out = full.apply(&rho).unwrap();
        assert!(out.op().max_abs_diff(&HermitianOperator::identity(2).scale(0.5)).unwrap() < 1e-14);
        assert_eq!(full.choi_rank(), 4);
        assert_eq!(Channel::depolarizing(3, 0.3).unwrap().choi_rank(), 9);
    }

    #[test]
    fn rejects_non_trace_preserving() {
        let k = CMatrix::identity(2, 2) * C64::new(0.9, 0.0);
        assert!(matches!(Channel::from_kraus(vec![k]), Err(Error::NotTracePreserving { .. })));
        let a = CMatrix::identity(2, 2);
        let b = CMatrix::zeros(3, 2);
        assert!(Channel::from_kraus(vec![a, b]).is_err());
    }

    #[test]
    fn choi_of_identity_and_full_depolarizing() {
        let c = Channel::identity(2).choi_matrix().unwrap();
        assert_eq!(c.rank(None), 1);
        assert_abs_diff_eq!(c.trace(), 2.0, epsilon = 1e-14);
        let c = Channel::depolarizing(2, 1.0).unwrap().choi_matrix().unwrap();
        assert!(c.op().max_abs_diff(&HermitianOperator::identity(4).scale(0.5)).unwrap() < 1e-14);
    }

    #[test]
    fn identity_channel_information() {
        let rho = PositiveOperator::from_diagonal(vec![0.6, 0.3, 0.1]).unwrap();
        let id = Channel::identity(3);
        let s = von_neumann_entropy(&rho);
        assert_abs_diff_eq!(id.mutual_information(&rho).unwrap(), 2.0 * s, epsilon = 1e-12);
        assert_abs_diff_eq!(id.coherent_information(&rho).unwrap(), s, epsilon = 1e-12);
        let pure = DensityOperator::basis_state(3, 1);
        assert_abs_diff_eq!(id.mutual_information(&pure).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(id.coherent_information(&pure).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn complementary_of_identity_is_constant() {
        let c = Channel::identity(2).complementary().unwrap();
        assert_eq!((c.d_in(), c.d_out()), (2, 1));
        let out = c.apply(&DensityOperator::maximally_mixed(2)).unwrap();
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn extended_output_marginals() {
        let rho = DensityOperator::maximally_mixed(2);
        let ch = Channel::depolarizing(2, 0.5).unwrap();
        let (out, r) = ch.extended_output(&rho).unwrap();
        assert_eq!(r, 2);
        let b = partial_trace(out.op(), 2, 2, Subsystem::A).unwrap();
        assert!(b.max_abs_diff(ch.apply(&rho).unwrap().op()).unwrap() < 1e-14);
        // Fully depolarizing output is a product state: no information gets through.
        let full = Channel::depolarizing(2, 1.0).unwrap();
        assert_abs_diff_eq!(full.mutual_information(&rho).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(full.coherent_information(&rho).unwrap(), -LN_2, epsilon = 1e-12);
    }

    #[test]
    fn depolarizing_probe_decays_like_one_over_n() {
        let seq = ChannelSequence::depolarizing(2, 1.0);
        let probes = vec![DensityOperator::basis_state(2, 0)];
        let grid = strong_convergence_probe(&seq, &probes, 8, Execution::Sequential).unwrap();
        for (i, d) in grid[0].iter().enumerate() {
            // ‖p(I/2 − |0⟩⟨0|)‖₁ = p.
            assert_abs_diff_eq!(*d, 1.0 / (i + 1) as f64, epsilon = 1e-13);
        }
        let seq = ChannelSequence::constant(Channel::identity(2), "id");
        let grid = strong_convergence_probe(&seq, &probes, 3, Execution::Parallel).unwrap();
        assert!(grid[0].iter().all(|&d| d == 0.0));
    }
}
