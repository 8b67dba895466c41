//! Orderings and the objectives evaluated on them.
//!
//! Positions are 1-based everywhere in the public API: `perm[v]` is the
//! position of vertex `v` in `1..=n`.

use serde::{Deserialize, Serialize};

use crate::instance::InteractionMatrix;

pub const ORDERING_SCHEMA: &str = "bandopt-ordering/1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("ordering is not a bijection onto 1..={n}: {reason}")]
    NotBijective { n: usize, reason: String },
    #[error("size mismatch: matrix has {matrix} vertices, ordering has {ordering}")]
    SizeMismatch { matrix: usize, ordering: usize },
    #[error("vertex index {index} out of range for {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("optimum must be positive to compute a gap, got {0}")]
    NonPositiveOptimum(f64),
    #[error("malformed ordering file: {0}")]
    Malformed(String),
}

/// A bijection from vertices to positions `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ordering {
    perm: Vec<usize>,
}

impl Ordering {
    pub fn new(perm: Vec<usize>) -> Result<Self, MetricsError> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for (v, &p) in perm.iter().enumerate() {
            if p == 0 || p > n {
                return Err(MetricsError::NotBijective {
                    n,
                    reason: format!("vertex {v} has position {p}"),
                });
            }
            if std::mem::replace(&mut seen[p - 1], true) {
                return Err(MetricsError::NotBijective {
                    n,
                    reason: format!("position {p} used twice"),
                });
            }
        }
        Ok(Self { perm })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (1..=n).collect(),
        }
    }

    /// Builds the ordering that lists `sequence[0]` first, `sequence[1]`
    /// second, and so on.
    pub fn from_sequence(sequence: &[usize]) -> Result<Self, MetricsError> {
        let n = sequence.len();
        let mut perm = vec![0; n];
        for (slot, &v) in sequence.iter().enumerate() {
            if v >= n {
                return Err(MetricsError::IndexOutOfRange { index: v, n });
            }
            if perm[v] != 0 {
                return Err(MetricsError::NotBijective {
                    n,
                    reason: format!("vertex {v} listed twice"),
                });
            }
            perm[v] = slot + 1;
        }
        Ok(Self { perm })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// 1-based position of `v`.
    #[inline]
    pub fn position(&self, v: usize) -> usize {
        self.perm[v]
    }

    pub fn positions(&self) -> &[usize] {
        &self.perm
    }

    /// Vertices in position order.
    pub fn sequence(&self) -> Vec<usize> {
        let mut seq = vec![0; self.perm.len()];
        for (v, &p) in self.perm.iter().enumerate() {
            seq[p - 1] = v;
        }
        seq
    }

    /// `pi'(v) = n + 1 - pi(v)`.
    pub fn reversed(&self) -> Self {
        let n = self.perm.len();
        Self {
            perm: self.perm.iter().map(|&p| n + 1 - p).collect(),
        }
    }

    /// The inverse permutation, read as an ordering: vertex `p - 1` goes to
    /// position `v + 1` whenever `pi(v) = p`.
    pub fn inverse(&self) -> Self {
        Self {
            perm: self.sequence().into_iter().map(|v| v + 1).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = OrderingFile {
            schema: ORDERING_SCHEMA.to_owned(),
            perm: self.perm.clone(),
        };
        let mut s = serde_json::to_string(&file).expect("ordering serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        let file: OrderingFile =
            serde_json::from_str(text).map_err(|e| MetricsError::Malformed(e.to_string()))?;
        if file.schema != ORDERING_SCHEMA {
            return Err(MetricsError::Malformed(format!(
                "unsupported schema `{}`",
                file.schema
            )));
        }
        Self::new(file.perm)
    }
}

#[derive(Serialize, Deserialize)]
struct OrderingFile {
    schema: String,
    perm: Vec<usize>,
}

/// Weighted bandwidth together with a pair attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    pub value: f64,
    /// Lexicographically smallest `(u, v)`, `u < v`, attaining `value`;
    /// `None` when there are no pairs.
    pub argpair: Option<(usize, usize)>,
}

fn check_size(u: &InteractionMatrix, ord: &Ordering) -> Result<(), MetricsError> {
    if u.n() != ord.len() {
        return Err(MetricsError::SizeMismatch {
            matrix: u.n(),
            ordering: ord.len(),
        });
    }
    Ok(())
}

/// `max_{u<v} u_uv * |pi(u) - pi(v)|` over all pairs.
pub fn weighted_bandwidth(u: &InteractionMatrix, ord: &Ordering) -> Result<Bandwidth, MetricsError> {
    check_size(u, ord)?;
    let n = u.n();
    let mut best = Bandwidth {
        value: 0.0,
        argpair: None,
    };
    for a in 0..n {
        let pa = ord.position(a);
        for b in a + 1..n {
            let term = u.get(a, b) * pa.abs_diff(ord.position(b)) as f64;
            if best.argpair.is_none() || term > best.value {
                best = Bandwidth {
                    value: term,
                    argpair: Some((a, b)),
                };
            }
        }
    }
    Ok(best)
}

/// Largest position gap over the bonds; 0 without bonds.
pub fn classic_bandwidth(bonds: &[(usize, usize)], ord: &Ordering) -> Result<usize, MetricsError> {
    let n = ord.len();
    bonds.iter().try_fold(0, |acc, &(a, b)| {
        for index in [a, b] {
            if index >= n {
                return Err(MetricsError::IndexOutOfRange { index, n });
            }
        }
        Ok(acc.max(ord.position(a).abs_diff(ord.position(b))))
    })
}

/// Matrix with `M[pi(i) - 1][pi(j) - 1] = U[i][j]`.
pub fn permute_matrix(
    u: &InteractionMatrix,
    ord: &Ordering,
) -> Result<InteractionMatrix, MetricsError> {
    check_size(u, ord)?;
    let n = u.n();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let pi = ord.position(i) - 1;
        for j in 0..n {
            data[pi * n + ord.position(j) - 1] = u.get(i, j);
        }
    }
    Ok(InteractionMatrix::from_dense(n, data).expect("permutation preserves matrix invariants"))
}

/// `(obj_rcm - opt) / opt * 100`.
pub fn rcm_gap(obj_rcm: f64, opt: f64) -> Result<f64, MetricsError> {
    if opt.is_nan() || opt <= 0.0 {
        return Err(MetricsError::NonPositiveOptimum(opt));
    }
    Ok((obj_rcm - opt) / opt * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn collinear() -> InteractionMatrix {
        InteractionMatrix::from_rows(&[
            vec![0.0, 1.0, 1.0 / 729.0],
            vec![1.0, 0.0, 1.0 / 64.0],
            vec![1.0 / 729.0, 1.0 / 64.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn ordering_validation() {
        assert!(Ordering::new(vec![1, 2, 3]).is_ok());
        assert!(Ordering::new(vec![0, 1, 2]).is_err());
        assert!(Ordering::new(vec![1, 1, 3]).is_err());
        assert!(Ordering::new(vec![1, 2, 4]).is_err());
        assert!(Ordering::from_sequence(&[2, 0, 0]).is_err());
        assert_eq!(
            Ordering::from_sequence(&[2, 0, 1]).unwrap().positions(),
            &[2, 3, 1]
        );
    }

    #[test]
    fn two_sites() {
        let u = InteractionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        for ord in [Ordering::identity(2), Ordering::identity(2).reversed()] {
            let b = weighted_bandwidth(&u, &ord).unwrap();
            assert_eq!(b.value, 1.0);
            assert_eq!(b.argpair, Some((0, 1)));
        }
    }

    #[test]
    fn collinear_orderings() {
        let u = collinear();
        let b = weighted_bandwidth(&u, &Ordering::new(vec![1, 2, 3]).unwrap()).unwrap();
        assert_eq!((b.value, b.argpair), (1.0, Some((0, 1))));
        // A -> 1, C -> 2, B -> 3
        let b = weighted_bandwidth(&u, &Ordering::new(vec![1, 3, 2]).unwrap()).unwrap();
        assert_eq!((b.value, b.argpair), (2.0, Some((0, 1))));
    }

    #[test]
    fn single_vertex() {
        let u = InteractionMatrix::from_rows(&[vec![0.0]]).unwrap();
        let b = weighted_bandwidth(&u, &Ordering::identity(1)).unwrap();
        assert_eq!((b.value, b.argpair), (0.0, None));
    }

    #[test]
    fn ties_pick_smallest_pair() {
        let u = InteractionMatrix::from_rows(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        // 0 at 2, 1 at 1, 2 at 3: pairs (0,1)=1, (0,2)=1, (1,2)=2
        let b = weighted_bandwidth(&u, &Ordering::new(vec![2, 1, 3]).unwrap()).unwrap();
        assert_eq!((b.value, b.argpair), (2.0, Some((1, 2))));
        let b = weighted_bandwidth(&u, &Ordering::new(vec![1, 3, 2]).unwrap()).unwrap();
        assert_eq!((b.value, b.argpair), (2.0, Some((0, 1))));
    }

    #[test]
    fn size_mismatch() {
        let u = collinear();
        assert_eq!(
            weighted_bandwidth(&u, &Ordering::identity(2)),
            Err(MetricsError::SizeMismatch {
                matrix: 3,
                ordering: 2
            })
        );
        assert!(permute_matrix(&u, &Ordering::identity(4)).is_err());
    }

    #[test]
    fn classic() {
        let path = [(0, 1), (1, 2)];
        assert_eq!(classic_bandwidth(&path, &Ordering::identity(3)).unwrap(), 1);
        assert_eq!(
            classic_bandwidth(&path, &Ordering::new(vec![1, 3, 2]).unwrap()).unwrap(),
            2
        );
        assert_eq!(classic_bandwidth(&[], &Ordering::identity(3)).unwrap(), 0);
        assert_eq!(
            classic_bandwidth(&[(0, 5)], &Ordering::identity(3)),
            Err(MetricsError::IndexOutOfRange { index: 5, n: 3 })
        );
    }

    #[test]
    fn permute_swap() {
        let u = InteractionMatrix::from_rows(&[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 3.0],
            vec![2.0, 3.0, 0.0],
        ])
        .unwrap();
        let swapped = permute_matrix(&u, &Ordering::new(vec![2, 1, 3]).unwrap()).unwrap();
        assert_eq!(
            swapped.to_rows(),
            vec![
                vec![0.0, 1.0, 3.0],
                vec![1.0, 0.0, 2.0],
                vec![3.0, 2.0, 0.0],
            ]
        );
        assert_eq!(permute_matrix(&u, &Ordering::identity(3)).unwrap(), u);
    }

    #[test]
    fn gap() {
        assert_eq!(rcm_gap(2.0, 2.0).unwrap(), 0.0);
        assert_eq!(rcm_gap(3.0, 2.0).unwrap(), 50.0);
        assert!(rcm_gap(1.0, 0.0).is_err());
        assert!(rcm_gap(1.0, -1.0).is_err());
        assert!(rcm_gap(1.0, f64::NAN).is_err());
    }

    #[test]
    fn ordering_json() {
        let ord = Ordering::new(vec![3, 1, 2]).unwrap();
        assert_eq!(
            ord.to_json(),
            "{\"schema\":\"bandopt-ordering/1\",\"perm\":[3,1,2]}\n"
        );
        assert_eq!(Ordering::from_json(&ord.to_json()).unwrap(), ord);
        assert!(Ordering::from_json(r#"{"schema":"bandopt-ordering/1","perm":[1,1]}"#).is_err());
        assert!(Ordering::from_json(r#"{"schema":"other","perm":[1]}"#).is_err());
    }

    fn matrix_and_ordering() -> impl Strategy<Value = (InteractionMatrix, Ordering)> {
        (1usize..9).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.0f64..10.0, n * (n - 1) / 2),
                Just((1..=n).collect::<Vec<_>>()).prop_shuffle(),
            )
                .prop_map(move |(upper, perm)| {
                    let mut data = vec![0.0; n * n];
                    let mut k = 0;
                    for i in 0..n {
                        for j in i + 1..n {
                            data[i * n + j] = upper[k];
                            data[j * n + i] = upper[k];
                            k += 1;
                        }
                    }
                    (
                        InteractionMatrix::from_dense(n, data).unwrap(),
                        Ordering::new(perm).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn reversal_keeps_bandwidth((u, ord) in matrix_and_ordering()) {
            let a = weighted_bandwidth(&u, &ord).unwrap().value;
            let b = weighted_bandwidth(&u, &ord.reversed()).unwrap().value;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn relabeling_invariance(
            (u, ord, sigma) in matrix_and_ordering().prop_flat_map(|(u, ord)| {
                let n = u.n();
                (Just(u), Just(ord), Just((1..=n).collect::<Vec<_>>()).prop_shuffle())
            })
        ) {
            // Relabel vertex v as sigma(v) - 1, permute U the same way and
            // carry each vertex's position over.
            let n = u.n();
            let sigma = Ordering::new(sigma).unwrap();
            let relabeled = permute_matrix(&u, &sigma).unwrap();
            let mut perm = vec![0; n];
            for v in 0..n {
                perm[sigma.position(v) - 1] = ord.position(v);
            }
            let carried = Ordering::new(perm).unwrap();
            prop_assert_eq!(
                weighted_bandwidth(&u, &ord).unwrap().value,
                weighted_bandwidth(&relabeled, &carried).unwrap().value
            );
        }

        #[test]
        fn permuted_matrix_cross_check((u, ord) in matrix_and_ordering()) {
            let m = permute_matrix(&u, &ord).unwrap();
            let n = u.n();
            let mut best = 0.0f64;
            for r in 0..n {
                for c in r + 1..n {
                    best = best.max(m.get(r, c) * (c - r) as f64);
                }
            }
            prop_assert_eq!(best, weighted_bandwidth(&u, &ord).unwrap().value);
            let back = permute_matrix(&m, &ord.inverse()).unwrap();
            prop_assert_eq!(back, u);
        }
    }
}
