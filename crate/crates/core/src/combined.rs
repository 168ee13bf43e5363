//! Flattening of the two-stage (signal, then optional outcome) experiment
//! into a single distribution over the combined outcome space.
//!
//! Atom order is fixed: the `ℓ` signal atoms first, then outcome atoms in
//! `(k, j)` lexicographic order. LP columns in [`crate::minpay`] use the same
//! order.

use serde::Serialize;

use crate::{Contract, Result, Setting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Atom {
    /// Signal `k` observed and not inspected.
    Signal(usize),
    /// Signal `k` inspected, refined outcome `j` revealed.
    Outcome(usize, usize),
}

/// Index of every atom for a given setting shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layout {
    atoms: Vec<Atom>,
    outcome_offsets: Vec<usize>,
}

impl Layout {
    pub fn new(setting: &Setting) -> Self {
        let ell = setting.n_signals();
        let mut atoms: Vec<Atom> = (0..ell).map(Atom::Signal).collect();
        let mut outcome_offsets = Vec::with_capacity(ell);
        for k in 0..ell {
            outcome_offsets.push(atoms.len());
            atoms.extend((0..setting.n_outcomes(k)).map(|j| Atom::Outcome(k, j)));
        }
        Self {
            atoms,
            outcome_offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn signal_index(&self, k: usize) -> usize {
        k
    }

    pub fn outcome_index(&self, k: usize, j: usize) -> usize {
        self.outcome_offsets[k] + j
    }

    pub fn index_of(&self, atom: Atom) -> usize {
        match atom {
            Atom::Signal(k) => self.signal_index(k),
            Atom::Outcome(k, j) => self.outcome_index(k, j),
        }
    }

    /// Rebuilds `(s, t)` from a payment vector over atoms.
    pub fn to_contract(&self, p: &[f64], v: &[f64]) -> Contract {
        let ell = self.outcome_offsets.len();
        let s = v[..ell].to_vec();
        let t = (0..ell)
            .map(|k| {
                let end = self
                    .outcome_offsets
                    .get(k + 1)
                    .copied()
                    .unwrap_or(self.atoms.len());
                v[self.outcome_offsets[k]..end].to_vec()
            })
            .collect();
        Contract {
            p: p.to_vec(),
            s,
            t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedDistribution {
    pub layout: Layout,
    /// `f[i][ω]`, one row per action.
    pub f: Vec<Vec<f64>>,
}

impl CombinedDistribution {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.f[i]
    }

    /// `f_i · v`, the expected transfer under payment vector `v`.
    pub fn expected(&self, i: usize, v: &[f64]) -> f64 {
        self.f[i].iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// `f[i, Signal(k)] = q0[i,k](1-p_k)` and
/// `f[i, Outcome(k,j)] = q0[i,k] p_k qk[i,j]`.
pub fn combined_distribution(setting: &Setting, p: &[f64]) -> Result<CombinedDistribution> {
    setting.check_policy(p)?;
    let layout = Layout::new(setting);
    let f = (0..setting.n_actions())
        .map(|i| {
            layout
                .atoms()
                .iter()
                .map(|atom| match *atom {
                    Atom::Signal(k) => setting.q0(i, k) * (1.0 - p[k]),
                    Atom::Outcome(k, j) => setting.q0(i, k) * p[k] * setting.qk(k, i, j),
                })
                .collect()
        })
        .collect();
    Ok(CombinedDistribution { layout, f })
}

/// `v[Signal(k)] = s_k`, `v[Outcome(k,j)] = t_{k,j}`.
pub fn combined_payments(setting: &Setting, ct: &Contract) -> Result<Vec<f64>> {
    setting.check_contract(ct)?;
    let mut v = ct.s.clone();
    for row in &ct.t {
        v.extend_from_slice(row);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::uninformative_signal;

    #[test]
    fn zero_policy_leaves_signal_mass() {
        let s = crate::model::fixtures::randomization_witness();
        let cd = combined_distribution(&s, &[0.0, 0.0]).unwrap();
        for i in 0..3 {
            assert_eq!(&cd.row(i)[..2], s.signal_dist()[i].as_slice());
            assert!(cd.row(i)[2..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn full_inspection_reveals_action() {
        let s = uninformative_signal();
        let cd = combined_distribution(&s, &[1.0]).unwrap();
        assert_eq!(
            cd.layout.atoms(),
            &[Atom::Signal(0), Atom::Outcome(0, 0), Atom::Outcome(0, 1)]
        );
        assert_eq!(cd.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(cd.row(1), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn payments_follow_layout() {
        let s = uninformative_signal();
        let ct = Contract {
            p: vec![1.0],
            s: vec![0.0],
            t: vec![vec![0.0, 1.0]],
        };
        let v = combined_payments(&s, &ct).unwrap();
        assert_eq!(v, vec![0.0, 0.0, 1.0]);
        let layout = Layout::new(&s);
        assert_eq!(layout.to_contract(&ct.p, &v), ct);
        assert_eq!(layout.index_of(Atom::Outcome(0, 1)), 2);
    }

    #[test]
    fn rejects_bad_policy() {
        let s = uninformative_signal();
        assert!(combined_distribution(&s, &[1.5]).is_err());
        assert!(combined_distribution(&s, &[0.5, 0.5]).is_err());
    }
}
