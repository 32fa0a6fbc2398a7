//! Exact density-matrix computations for small systems (up to 10 qubits).
//!
//! This module is the ground truth for every closed-form fidelity in the
//! crate: it builds noisy GHZ parents as explicit `2^n x 2^n` operators,
//! applies depolarizing channels, performs Bell-state fusion measurements
//! with outcome-conditioned Pauli corrections, and reads off fidelities.
//! Dense matrices are deliberate; exactness beats scale here.
//!
//! Conventions: qubit `i` corresponds to bit `i` (least significant first)
//! of the computational-basis index. The Bell outcomes are corrected as
//! Phi+ -> I, Phi- -> Z, Psi+ -> X, Psi- -> X then Z. A Bell measurement
//! that joins two previously unconnected GHZ groups needs the X correction
//! on *every* surviving qubit of the absorbed group, which is why fusion is
//! driven by a [`FusionLayout`] that tracks group membership.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::DepolarizingParam;

/// Hard cap on system size: 1024 x 1024 complex entries (~16 MB).
pub const MAX_QUBITS: usize = 10;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Dense density operator of an `n_qubits` system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: DMatrix<Complex64>,
}

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n_qubits", 0.0, ">= 1"));
    }
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: n,
            cap: MAX_QUBITS,
        });
    }
    Ok(())
}

/// The pure state `(|0...0> + |1...1>)/sqrt(2)` as a density matrix.
pub fn ghz_state(n_qubits: usize) -> Result<DensityMatrix> {
    check_qubit_count(n_qubits)?;
    let dim = 1usize << n_qubits;
    let mut data = DMatrix::zeros(dim, dim);
    let half = Complex64::new(0.5, 0.0);
    data[(0, 0)] = half;
    data[(0, dim - 1)] = half;
    data[(dim - 1, 0)] = half;
    data[(dim - 1, dim - 1)] = half;
    Ok(DensityMatrix {
        n_qubits,
        data,
    })
}

/// The maximally mixed state `I / 2^n`.
pub fn maximally_mixed(n_qubits: usize) -> Result<DensityMatrix> {
    check_qubit_count(n_qubits)?;
    let dim = 1usize << n_qubits;
    let value = Complex64::new(1.0 / dim as f64, 0.0);
    Ok(DensityMatrix {
        n_qubits,
        data: DMatrix::from_diagonal_element(dim, dim, value),
    })
}

/// `p_ghz * |GHZ><GHZ| + (1 - p_ghz) * I/2^n`.
pub fn ghz_mixture(n_qubits: usize, p_ghz: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p_ghz) || !p_ghz.is_finite() {
        return Err(Error::domain("p_ghz", p_ghz, "[0, 1]"));
    }
    let ghz = ghz_state(n_qubits)?;
    let mixed = maximally_mixed(n_qubits)?;
    Ok(DensityMatrix {
        n_qubits,
        data: ghz.data * Complex64::new(p_ghz, 0.0)
            + mixed.data * Complex64::new(1.0 - p_ghz, 0.0),
    })
}

/// Tensor product of the given states; `parents[0]` occupies the lowest
/// qubit indices, each following state the next block above.
pub fn product_state(parents: &[DensityMatrix]) -> Result<DensityMatrix> {
    if parents.is_empty() {
        return Err(Error::InvalidInput("empty product".into()));
    }
    let total: usize = parents.iter().map(|p| p.n_qubits).sum();
    check_qubit_count(total)?;
    let mut data = parents[0].data.clone();
    for p in &parents[1..] {
        data = p.data.kronecker(&data);
    }
    Ok(DensityMatrix {
        n_qubits: total,
        data,
    })
}

impl DensityMatrix {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    /// Largest entrywise deviation from `rho = rho^dagger`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                let diff = self.data[(r, c)] - self.data[(c, r)].conj();
                worst = worst.max(diff.norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue, for positive-semidefiniteness checks.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.data.clone().symmetric_eigenvalues();
        eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `0.5 * ||self - other||_1` via the eigenvalues of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::LengthMismatch {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        let diff = &self.data - &other.data;
        let eig = diff.symmetric_eigenvalues();
        Ok(0.5 * eig.iter().map(|l| l.abs()).sum::<f64>())
    }

    /// Overlap `<GHZ| rho |GHZ>` with the GHZ state of matching size.
    pub fn fidelity_with_ghz(&self) -> f64 {
        let d = self.dim() - 1;
        0.5 * (self.data[(0, 0)] + self.data[(0, d)] + self.data[(d, 0)] + self.data[(d, d)]).re
    }

    /// Single-qubit depolarizing channel on `qubit` with the given keep
    /// probability: `rho -> keep * rho + (1-keep) * (I/2 (x) Tr_qubit rho)`.
    pub fn apply_depolarizing(&mut self, qubit: usize, keep: DepolarizingParam) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let keep = keep.keep();
        if keep == 1.0 {
            return Ok(());
        }
        let d = self.dim();
        let mask = 1usize << qubit;
        let mut out = DMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                let mut v = self.data[(r, c)] * keep;
                if (r ^ c) & mask == 0 {
                    let lo = (self.data[(r & !mask, c & !mask)]
                        + self.data[(r | mask, c | mask)])
                        * 0.5;
                    v += lo * (1.0 - keep);
                }
                out[(r, c)] = v;
            }
        }
        self.data = out;
        Ok(())
    }

    pub fn apply_pauli_x(&mut self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let d = self.dim();
        let mask = 1usize << qubit;
        let mut out = DMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                out[(r, c)] = self.data[(r ^ mask, c ^ mask)];
            }
        }
        self.data = out;
        Ok(())
    }

    pub fn apply_pauli_z(&mut self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let d = self.dim();
        let mask = 1usize << qubit;
        for r in 0..d {
            for c in 0..d {
                if (r & mask != 0) != (c & mask != 0) {
                    self.data[(r, c)] = -self.data[(r, c)];
                }
            }
        }
        Ok(())
    }
}

/// Outcome-conditioned Pauli corrections applied by [`bell_fuse`], given in
/// pre-fusion qubit indices. `x_targets` receive X on the Psi outcomes
/// (every surviving qubit of the absorbed group); `z_target` receives Z on
/// the minus outcomes.
#[derive(Debug, Clone, Default)]
pub struct FusionCorrection {
    pub x_targets: Vec<usize>,
    pub z_target: Option<usize>,
}

impl FusionCorrection {
    /// No corrections; only adequate for inputs that are invariant under
    /// local Paulis (e.g. maximally mixed states).
    pub fn none() -> Self {
        FusionCorrection::default()
    }
}

fn insert_bit(index: usize, pos: usize, bit: usize) -> usize {
    ((index >> pos) << (pos + 1)) | (bit << pos) | (index & ((1 << pos) - 1))
}

/// Projects qubits `(q1, q2)` onto the Bell basis, applies the
/// outcome-conditioned Pauli correction, averages over the four outcomes and
/// traces the measured qubits out. The output has two fewer qubits and unit
/// trace.
pub fn bell_fuse(
    rho: &DensityMatrix,
    q1: usize,
    q2: usize,
    correction: &FusionCorrection,
) -> Result<DensityMatrix> {
    let n = rho.n_qubits;
    if q1 >= n {
        return Err(Error::QubitIndex {
            index: q1,
            n_qubits: n,
        });
    }
    if q2 >= n {
        return Err(Error::QubitIndex {
            index: q2,
            n_qubits: n,
        });
    }
    if q1 == q2 {
        return Err(Error::InvalidInput("bell_fuse needs two distinct qubits".into()));
    }
    if n < 3 {
        return Err(Error::InvalidInput(
            "bell_fuse output would have no qubits left".into(),
        ));
    }
    for &t in &correction.x_targets {
        if t == q1 || t == q2 || t >= n {
            return Err(Error::QubitIndex {
                index: t,
                n_qubits: n,
            });
        }
    }
    if let Some(t) = correction.z_target {
        if t == q1 || t == q2 || t >= n {
            return Err(Error::QubitIndex {
                index: t,
                n_qubits: n,
            });
        }
    }

    // Remap correction targets to post-trace indices.
    let remap = |t: usize| t - usize::from(t > q1) - usize::from(t > q2);
    let x_mask: usize = correction
        .x_targets
        .iter()
        .fold(0, |m, &t| m | (1usize << remap(t)));
    let z_mask: usize = correction.z_target.map_or(0, |t| 1usize << remap(t));

    let (lo, hi) = if q1 < q2 { (q1, q2) } else { (q2, q1) };
    // Bit values to insert at (lo, hi) for a basis ket |q1=a, q2=b>.
    let insert_full = |reduced: usize, a: usize, b: usize| {
        let (lo_bit, hi_bit) = if q1 < q2 { (a, b) } else { (b, a) };
        insert_bit(insert_bit(reduced, lo, lo_bit), hi, hi_bit)
    };

    let s = FRAC_1_SQRT_2;
    // (a, b, amplitude) pairs plus (apply_x, apply_z), for Phi+, Phi-,
    // Psi+, Psi-.
    type Outcome = ([(usize, usize, f64); 2], bool, bool);
    let outcomes: [Outcome; 4] = [
        ([(0, 0, s), (1, 1, s)], false, false),
        ([(0, 0, s), (1, 1, -s)], false, true),
        ([(0, 1, s), (1, 0, s)], true, false),
        ([(0, 1, s), (1, 0, -s)], true, true),
    ];

    let d_out = 1usize << (n - 2);
    let mut acc = DMatrix::<Complex64>::zeros(d_out, d_out);
    for (kets, apply_x, apply_z) in &outcomes {
        for r in 0..d_out {
            for c in 0..d_out {
                // <bell| rho |bell> on the measured pair.
                let mut v = Complex64::new(0.0, 0.0);
                for &(a, b, w) in kets {
                    for &(a2, b2, w2) in kets {
                        v += rho.data[(insert_full(r, a, b), insert_full(c, a2, b2))] * (w * w2);
                    }
                }
                // Conjugate by the outcome's correction while accumulating.
                let (mut tr, mut tc) = (r, c);
                if *apply_x {
                    tr ^= x_mask;
                    tc ^= x_mask;
                }
                if *apply_z {
                    let sign = |i: usize| 1.0 - 2.0 * ((i & z_mask).count_ones() % 2) as f64;
                    v *= sign(tr) * sign(tc);
                }
                acc[(tr, tc)] += v;
            }
        }
    }

    Ok(DensityMatrix {
        n_qubits: n - 2,
        data: acc,
    })
}

/// One qubit of one parent state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParentSlot {
    pub parent: usize,
    pub slot: usize,
}

/// Which qubits of which parents get measured together, and in what order.
///
/// Slot 0 of every parent is its end-node qubit and survives the fusion;
/// slots `1..n` are consumed by Bell measurements.
#[derive(Debug, Clone)]
pub struct FusionLayout {
    n_users: usize,
    measurements: Vec<(ParentSlot, ParentSlot)>,
}

impl FusionLayout {
    /// The symmetric layout: one Bell measurement between every pair of
    /// parents, `n (n-1) / 2` measurements in total.
    pub fn symmetric(n_users: usize) -> FusionLayout {
        let mut measurements = Vec::new();
        for i in 0..n_users {
            for j in (i + 1)..n_users {
                measurements.push((
                    ParentSlot {
                        parent: i,
                        slot: Self::slot_toward(i, j),
                    },
                    ParentSlot {
                        parent: j,
                        slot: Self::slot_toward(j, i),
                    },
                ));
            }
        }
        FusionLayout {
            n_users,
            measurements,
        }
    }

    /// The slot of parent `i` that faces parent `j`.
    fn slot_toward(i: usize, j: usize) -> usize {
        if j < i {
            j + 1
        } else {
            j
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn measurements(&self) -> &[(ParentSlot, ParentSlot)] {
        &self.measurements
    }
}

/// Runs the layout's Bell measurements over explicit parent states, applying
/// lineage-aware Pauli corrections, then the per-final-qubit depolarizing
/// keeps. Returns the resulting state on the `n_users` surviving qubits,
/// ordered by parent.
pub fn run_fusion(
    layout: &FusionLayout,
    parents: &[DensityMatrix],
    final_keeps: &[DepolarizingParam],
) -> Result<DensityMatrix> {
    let n = layout.n_users;
    if parents.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: parents.len(),
        });
    }
    if final_keeps.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: final_keeps.len(),
        });
    }
    for p in parents {
        if p.n_qubits != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: p.n_qubits,
            });
        }
    }

    let mut state = product_state(parents)?;
    let site = |ps: ParentSlot| ps.parent * n + ps.slot;
    let mut alive = vec![true; n * n];
    let mut pos: Vec<usize> = (0..n * n).collect();
    // Group label per parent; merged as measurements connect them.
    let mut group: Vec<usize> = (0..n).collect();

    for &(a, b) in &layout.measurements {
        let (sa, sb) = (site(a), site(b));
        if !alive[sa] || !alive[sb] {
            return Err(Error::InvalidInput(format!(
                "layout measures an already-consumed qubit (parent {}, slot {})",
                a.parent, a.slot
            )));
        }
        let (qa, qb) = (pos[sa], pos[sb]);
        let (ga, gb) = (group[a.parent], group[b.parent]);

        // X lands on every surviving qubit of the absorbed (b-side) group;
        // Z on one surviving qubit of the joined group.
        let mut x_targets = Vec::new();
        if ga != gb {
            for s in 0..n * n {
                if alive[s] && s != sa && s != sb && group[s / n] == gb {
                    x_targets.push(pos[s]);
                }
            }
        }
        let z_target = (0..n * n)
            .find(|&s| {
                alive[s]
                    && s != sa
                    && s != sb
                    && (group[s / n] == ga || group[s / n] == gb)
            })
            .map(|s| pos[s]);

        state = bell_fuse(
            &state,
            qa,
            qb,
            &FusionCorrection {
                x_targets,
                z_target,
            },
        )?;

        alive[sa] = false;
        alive[sb] = false;
        for s in 0..n * n {
            if alive[s] {
                pos[s] -= usize::from(pos[s] > qa) + usize::from(pos[s] > qb);
            }
        }
        if ga != gb {
            for g in group.iter_mut() {
                if *g == gb {
                    *g = ga;
                }
            }
        }
    }

    for (i, keep) in final_keeps.iter().enumerate() {
        let s = site(ParentSlot { parent: i, slot: 0 });
        debug_assert!(alive[s]);
        state.apply_depolarizing(pos[s], *keep)?;
    }
    Ok(state)
}

/// End-to-end oracle: builds `n_users` identical GHZ/maximally-mixed parent
/// mixtures, fuses them through the symmetric layout, applies the
/// per-final-qubit keeps and returns the fidelity with the `n_users`-qubit
/// GHZ state.
pub fn fuse_parents_oracle(
    n_users: usize,
    p_ghz: f64,
    keeps: &[DepolarizingParam],
) -> Result<f64> {
    let parent = ghz_mixture(n_users, p_ghz)?;
    let parents = vec![parent; n_users];
    let fused = run_fusion(&FusionLayout::symmetric(n_users), &parents, keeps)?;
    Ok(fused.fidelity_with_ghz())
}

/// Like [`fuse_parents_oracle`] but with each parent pinned to a definite
/// component: GHZ where `parent_is_ghz` is true, maximally mixed elsewhere.
pub fn fuse_component_parents(
    n_users: usize,
    parent_is_ghz: &[bool],
    keeps: &[DepolarizingParam],
) -> Result<f64> {
    if parent_is_ghz.len() != n_users {
        return Err(Error::LengthMismatch {
            expected: n_users,
            actual: parent_is_ghz.len(),
        });
    }
    let parents: Vec<DensityMatrix> = parent_is_ghz
        .iter()
        .map(|&g| {
            if g {
                ghz_state(n_users)
            } else {
                maximally_mixed(n_users)
            }
        })
        .collect::<Result<_>>()?;
    let fused = run_fusion(&FusionLayout::symmetric(n_users), &parents, keeps)?;
    Ok(fused.fidelity_with_ghz())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keep(p: f64) -> DepolarizingParam {
        DepolarizingParam::new(p).unwrap()
    }

    fn ones(n: usize) -> Vec<DepolarizingParam> {
        vec![DepolarizingParam::IDENTITY; n]
    }

    #[test]
    fn ghz_state_entries() {
        let g = ghz_state(3).unwrap();
        assert_eq!(g.dim(), 8);
        let mut nonzero = 0;
        for r in 0..8 {
            for c in 0..8 {
                let v = g.entry(r, c);
                if v.norm() > 0.0 {
                    nonzero += 1;
                    assert!((v.re - 0.5).abs() < 1e-15);
                }
            }
        }
        assert_eq!(nonzero, 4);
        assert!((g.trace() - 1.0).abs() < 1e-15);
        assert_eq!(g.fidelity_with_ghz(), 1.0);
        // Single qubit: (|0> + |1>)/sqrt(2), still fidelity 1 with itself.
        assert_eq!(ghz_state(1).unwrap().fidelity_with_ghz(), 1.0);
    }

    #[test]
    fn maximally_mixed_fidelity() {
        for n in 1..=4 {
            let w = maximally_mixed(n).unwrap();
            assert!((w.trace() - 1.0).abs() < 1e-15);
            assert!((w.fidelity_with_ghz() - 0.5f64.powi(n as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn mixture_fidelity_is_linear() {
        for &p in &[0.0, 0.3, 0.75, 1.0] {
            let m = ghz_mixture(3, p).unwrap();
            let expect = p + (1.0 - p) / 8.0;
            assert!((m.fidelity_with_ghz() - expect).abs() < 1e-15);
        }
        assert!(ghz_mixture(3, 1.2).is_err());
        assert!(ghz_mixture(3, -0.1).is_err());
    }

    #[test]
    fn size_cap_enforced() {
        assert!(ghz_state(MAX_QUBITS).is_ok());
        assert!(ghz_state(MAX_QUBITS + 1).is_err());
        assert!(ghz_state(0).is_err());
    }

    #[test]
    fn depolarizing_identity_and_full() {
        let g = ghz_state(2).unwrap();
        let mut same = g.clone();
        same.apply_depolarizing(0, DepolarizingParam::IDENTITY).unwrap();
        assert_eq!(same, g);

        let mut single = ghz_state(1).unwrap();
        single.apply_depolarizing(0, keep(0.0)).unwrap();
        assert!(single.trace_distance(&maximally_mixed(1).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn depolarizing_bell_checkpoint() {
        // keep = 0.9 on both qubits of a Bell state: (1 + 3 p^2)/4 = 0.8575.
        let mut b = ghz_state(2).unwrap();
        b.apply_depolarizing(0, keep(0.9)).unwrap();
        b.apply_depolarizing(1, keep(0.9)).unwrap();
        assert!((b.fidelity_with_ghz() - 0.8575).abs() < 1e-15);
        assert!((b.trace() - 1.0).abs() < 1e-12);
        assert!(b.hermiticity_deviation() < 1e-12);
    }

    #[test]
    fn channel_composition_matches_sequential_application() {
        // One qubit, two channels vs the composed channel, random-ish states.
        let (a, b) = (keep(0.8), keep(0.5));
        let composed = a.compose(b);
        for &p in &[0.0, 0.2, 0.9, 1.0] {
            let mut seq = ghz_mixture(1, p).unwrap();
            seq.apply_depolarizing(0, a).unwrap();
            seq.apply_depolarizing(0, b).unwrap();
            let mut once = ghz_mixture(1, p).unwrap();
            once.apply_depolarizing(0, composed).unwrap();
            assert!(seq.trace_distance(&once).unwrap() < 1e-12);
        }
    }

    #[test]
    fn swapping_two_bell_pairs_is_exact() {
        // Bell(0,1) (x) Bell(2,3); measure (1,2); correction partner is 3.
        let bell = ghz_state(2).unwrap();
        let state = product_state(&[bell.clone(), bell.clone()]).unwrap();
        let out = bell_fuse(
            &state,
            1,
            2,
            &FusionCorrection {
                x_targets: vec![3],
                z_target: Some(3),
            },
        )
        .unwrap();
        assert_eq!(out.n_qubits(), 2);
        assert!((out.trace() - 1.0).abs() < 1e-12);
        assert!(out.trace_distance(&ghz_state(2).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn swapping_without_correction_decoheres() {
        let bell = ghz_state(2).unwrap();
        let state = product_state(&[bell.clone(), bell]).unwrap();
        let out = bell_fuse(&state, 1, 2, &FusionCorrection::none()).unwrap();
        // Averaging the four uncorrected outcomes wipes out the coherence.
        assert!(out.fidelity_with_ghz() < 0.26);
    }

    #[test]
    fn identity_invariance_under_fusion() {
        for n in [4usize, 6] {
            let mixed = maximally_mixed(n).unwrap();
            let out = bell_fuse(&mixed, 1, 2, &FusionCorrection::none()).unwrap();
            let expect = maximally_mixed(n - 2).unwrap();
            assert!(out.trace_distance(&expect).unwrap() <= 1e-12);
            // Correction choice cannot matter on the identity.
            let out2 = bell_fuse(
                &mixed,
                1,
                2,
                &FusionCorrection {
                    x_targets: vec![0, 3],
                    z_target: Some(0),
                },
            )
            .unwrap();
            assert!(out2.trace_distance(&expect).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn bell_pair_fused_into_mixed_loses_quantum_correlations() {
        let state = product_state(&[ghz_state(2).unwrap(), maximally_mixed(2).unwrap()]).unwrap();
        let out = bell_fuse(
            &state,
            1,
            2,
            &FusionCorrection {
                x_targets: vec![3],
                z_target: Some(3),
            },
        )
        .unwrap();
        assert!(out.fidelity_with_ghz() <= 0.5 + 1e-12);
    }

    #[test]
    fn fuse_rejects_bad_indices() {
        let g = ghz_state(4).unwrap();
        assert!(bell_fuse(&g, 1, 1, &FusionCorrection::none()).is_err());
        assert!(bell_fuse(&g, 0, 9, &FusionCorrection::none()).is_err());
        let bad = FusionCorrection {
            x_targets: vec![1],
            z_target: None,
        };
        assert!(bell_fuse(&g, 1, 2, &bad).is_err(), "target may not be measured");
    }

    #[test]
    fn symmetric_layout_shape() {
        let layout = FusionLayout::symmetric(3);
        assert_eq!(layout.measurements().len(), 3);
        // Every slot 1..n of every parent is consumed exactly once.
        let mut used = [0usize; 9];
        for &(a, b) in layout.measurements() {
            used[a.parent * 3 + a.slot] += 1;
            used[b.parent * 3 + b.slot] += 1;
        }
        for p in 0..3 {
            assert_eq!(used[p * 3], 0, "slot 0 survives");
            assert_eq!(used[p * 3 + 1], 1);
            assert_eq!(used[p * 3 + 2], 1);
        }
    }

    #[test]
    fn perfect_parents_fuse_to_perfect_ghz() {
        for n in [2usize, 3] {
            let f = fuse_parents_oracle(n, 1.0, &ones(n)).unwrap();
            assert!((f - 1.0).abs() < 1e-12, "n={n}: got {f}");
        }
    }

    #[test]
    fn fully_mixed_parents_fuse_to_fully_mixed() {
        for n in [2usize, 3] {
            let f = fuse_parents_oracle(n, 0.0, &ones(n)).unwrap();
            assert!((f - 0.5f64.powi(n as i32)).abs() < 1e-12, "n={n}: got {f}");
        }
    }

    #[test]
    fn fusion_preserves_trace_and_hermiticity() {
        let parents = vec![ghz_mixture(3, 0.7).unwrap(); 3];
        let out = run_fusion(
            &FusionLayout::symmetric(3),
            &parents,
            &[keep(0.9), keep(0.8), keep(1.0)],
        )
        .unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-12);
        assert!(out.hermiticity_deviation() < 1e-12);
        assert!(out.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn single_mixed_parent_destroys_quantum_correlations() {
        for mixed_at in 0..3 {
            let mut flags = [true; 3];
            flags[mixed_at] = false;
            let f = fuse_component_parents(3, &flags, &ones(3)).unwrap();
            assert!(
                f <= 0.5 + 1e-12,
                "mixed parent {mixed_at} must cap fidelity at 1/2, got {f}"
            );
        }
    }
}
