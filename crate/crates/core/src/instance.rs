//! Geometric instances: generation, persistence and the `1/d^6` interaction
//! matrix.
//!
//! Sites live in a square box of side `L`. The generator places them by
//! rejection sampling with a minimum separation `r_min`, then connects mutual
//! 4-nearest neighbours and repairs under-connected sites so that the mean
//! coordination lands near four. The bond graph only feeds the RCM baseline;
//! the weighted objective always uses the complete interaction matrix.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const INSTANCE_SCHEMA: &str = "bandopt-instance/1";

/// Neighbour count used before symmetrisation to mutual pairs.
const KNN: usize = 4;
/// Sites below this degree receive extra bonds to their nearest non-neighbours.
const MIN_DEGREE: usize = 3;
/// Consecutive rejected draws tolerated for a single site.
const MAX_ATTEMPTS_PER_SITE: usize = 20_000;

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("could not place site {placed} of {n} at separation {r_min} in a box of side {box_side} after {attempts} attempts")]
    GenerationFailed {
        n: usize,
        placed: usize,
        r_min: f64,
        box_side: f64,
        attempts: usize,
    },
    #[error("sites {0} and {1} coincide")]
    CoincidentSites(usize, usize),
    #[error("site {0} has a non-finite coordinate")]
    NonFiniteSite(usize),
    #[error("bond ({0}, {1}) is invalid for {2} sites")]
    InvalidBond(usize, usize, usize),
    #[error("duplicate bond ({0}, {1})")]
    DuplicateBond(usize, usize),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("unsupported schema `{found}`, expected `{expected}`")]
    SchemaMismatch { found: String, expected: &'static str },
    #[error("malformed instance file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("invalid interaction matrix: {0}")]
    InvalidMatrix(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parameters of the amorphous generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    /// Side of the square box.
    pub box_side: f64,
    /// Minimum distance between any two sites.
    pub r_min: f64,
}

impl GenParams {
    /// Unit density box (`L = sqrt(n)`) with `r_min = 0.7`.
    pub fn for_n(n: usize) -> Self {
        Self {
            box_side: (n as f64).sqrt(),
            r_min: 0.7,
        }
    }

    fn check(&self, n: usize) -> Result<(), InstanceError> {
        if n < 2 {
            return Err(InstanceError::InvalidParams(format!(
                "need at least 2 sites, got {n}"
            )));
        }
        if !(self.box_side.is_finite() && self.box_side > 0.0) {
            return Err(InstanceError::InvalidParams(format!(
                "box side must be positive, got {}",
                self.box_side
            )));
        }
        if !(self.r_min.is_finite() && self.r_min > 0.0) {
            return Err(InstanceError::InvalidParams(format!(
                "r_min must be positive, got {}",
                self.r_min
            )));
        }
        if n as f64 * self.r_min * self.r_min >= self.box_side * self.box_side {
            return Err(InstanceError::InvalidParams(format!(
                "{n} sites at separation {} cannot fit in a box of side {}",
                self.r_min, self.box_side
            )));
        }
        Ok(())
    }
}

/// A validated set of sites with its short-range bond structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    id: String,
    seed: u64,
    params: GenParams,
    sites: Vec<[f64; 2]>,
    bonds: Vec<(usize, usize)>,
}

impl Instance {
    /// Builds an instance, checking every invariant. Bonds are normalised to
    /// `i < j` and sorted.
    pub fn new(
        id: impl Into<String>,
        seed: u64,
        params: GenParams,
        sites: Vec<[f64; 2]>,
        bonds: Vec<(usize, usize)>,
    ) -> Result<Self, InstanceError> {
        let n = sites.len();
        for (i, s) in sites.iter().enumerate() {
            if !(s[0].is_finite() && s[1].is_finite()) {
                return Err(InstanceError::NonFiniteSite(i));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if sites[i] == sites[j] {
                    return Err(InstanceError::CoincidentSites(i, j));
                }
            }
        }
        let mut norm = Vec::with_capacity(bonds.len());
        for (a, b) in bonds {
            if a == b || a >= n || b >= n {
                return Err(InstanceError::InvalidBond(a, b, n));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(InstanceError::DuplicateBond(w[0].0, w[0].1));
        }
        Ok(Self {
            id: id.into(),
            seed,
            params,
            sites,
            bonds: norm,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> GenParams {
        self.params
    }

    pub fn sites(&self) -> &[[f64; 2]] {
        &self.sites
    }

    /// Bonds as `(i, j)` with `i < j`, sorted.
    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.sites[i], self.sites[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n()];
        for &(a, b) in &self.bonds {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn mean_degree(&self) -> f64 {
        if self.sites.is_empty() {
            return 0.0;
        }
        2.0 * self.bonds.len() as f64 / self.n() as f64
    }

    /// Smallest pairwise distance, `None` for fewer than two sites.
    pub fn min_distance(&self) -> Option<f64> {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.distance(i, j))
            .min_by(f64::total_cmp)
    }

    /// Copy of the instance with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, InstanceError> {
        let sites = self
            .sites
            .iter()
            .map(|s| [s[0] * factor, s[1] * factor])
            .collect();
        let params = GenParams {
            box_side: self.params.box_side * factor,
            r_min: self.params.r_min * factor,
        };
        Self::new(
            self.id.clone(),
            self.seed,
            params,
            sites,
            self.bonds.clone(),
        )
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            schema: INSTANCE_SCHEMA.to_owned(),
            id: self.id.clone(),
            seed: self.seed,
            params: ParamsFile {
                box_side: self.params.box_side,
                r_min: self.params.r_min,
            },
            sites: self.sites.clone(),
            bonds: self.bonds.iter().map(|&(a, b)| [a, b]).collect(),
        };
        let mut s = serde_json::to_string(&file).expect("instance serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let raw: RawInstanceFile = serde_json::from_str(text)?;
        let schema = raw.schema.ok_or(InstanceError::MissingField("schema"))?;
        if schema != INSTANCE_SCHEMA {
            return Err(InstanceError::SchemaMismatch {
                found: schema,
                expected: INSTANCE_SCHEMA,
            });
        }
        let id = raw.id.ok_or(InstanceError::MissingField("id"))?;
        let seed = raw.seed.ok_or(InstanceError::MissingField("seed"))?;
        let params = raw.params.ok_or(InstanceError::MissingField("params"))?;
        let box_side = params.box_side.ok_or(InstanceError::MissingField("L"))?;
        let r_min = params.r_min.ok_or(InstanceError::MissingField("r_min"))?;
        let sites = raw.sites.ok_or(InstanceError::MissingField("sites"))?;
        let bonds = raw.bonds.ok_or(InstanceError::MissingField("bonds"))?;
        for &[a, b] in &bonds {
            if a >= b {
                return Err(InstanceError::InvalidBond(a, b, sites.len()));
            }
        }
        Self::new(
            id,
            seed,
            GenParams { box_side, r_min },
            sites,
            bonds.into_iter().map(|[a, b]| (a, b)).collect(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Complete-graph interaction matrix `u_ij = 1/d_ij^6`.
    pub fn interaction_matrix(&self) -> Result<InteractionMatrix, InstanceError> {
        interaction_matrix(self)
    }
}

#[derive(Serialize)]
struct InstanceFile {
    schema: String,
    id: String,
    seed: u64,
    params: ParamsFile,
    sites: Vec<[f64; 2]>,
    bonds: Vec<[usize; 2]>,
}

#[derive(Serialize)]
struct ParamsFile {
    #[serde(rename = "L")]
    box_side: f64,
    r_min: f64,
}

#[derive(Deserialize)]
struct RawInstanceFile {
    schema: Option<String>,
    id: Option<String>,
    seed: Option<u64>,
    params: Option<RawParams>,
    sites: Option<Vec<[f64; 2]>>,
    bonds: Option<Vec<[usize; 2]>>,
}

#[derive(Deserialize)]
struct RawParams {
    #[serde(rename = "L")]
    box_side: Option<f64>,
    r_min: Option<f64>,
}

/// Generates an amorphous instance. Deterministic in `(n, seed, params)`.
pub fn generate(n: usize, seed: u64, params: GenParams) -> Result<Instance, InstanceError> {
    params.check(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r2 = params.r_min * params.r_min;
    let mut sites: Vec<[f64; 2]> = Vec::with_capacity(n);
    while sites.len() < n {
        let mut attempts = 0;
        loop {
            if attempts == MAX_ATTEMPTS_PER_SITE {
                return Err(InstanceError::GenerationFailed {
                    n,
                    placed: sites.len(),
                    r_min: params.r_min,
                    box_side: params.box_side,
                    attempts,
                });
            }
            attempts += 1;
            let p = [
                rng.gen::<f64>() * params.box_side,
                rng.gen::<f64>() * params.box_side,
            ];
            let clear = sites.iter().all(|q| {
                let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
                dx * dx + dy * dy >= r2
            });
            if clear {
                sites.push(p);
                break;
            }
        }
    }
    let bonds = proximity_bonds(&sites);
    Instance::new(format!("amorphous-n{n}-s{seed}"), seed, params, sites, bonds)
}

/// Mutual k-nearest-neighbour bonds plus a repair pass for sites of degree
/// below [`MIN_DEGREE`].
fn proximity_bonds(sites: &[[f64; 2]]) -> Vec<(usize, usize)> {
    let n = sites.len();
    let dist2 = |i: usize, j: usize| {
        let (dx, dy) = (sites[i][0] - sites[j][0], sites[i][1] - sites[j][1]);
        dx * dx + dy * dy
    };
    // Every other site, nearest first, ties by index.
    let by_distance: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| dist2(i, a).total_cmp(&dist2(i, b)).then(a.cmp(&b)));
            others
        })
        .collect();

    let k = KNN.min(n - 1);
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for &j in &by_distance[i][..k] {
            if by_distance[j][..k].contains(&i) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }

    let min_degree = MIN_DEGREE.min(n - 1);
    for i in 0..n {
        let mut degree = adj[i].iter().filter(|&&b| b).count();
        for &j in &by_distance[i] {
            if degree >= min_degree {
                break;
            }
            if !adj[i][j] {
                adj[i][j] = true;
                adj[j][i] = true;
                degree += 1;
            }
        }
    }

    adj.iter()
        .enumerate()
        .flat_map(|(i, row)| (i + 1..n).filter(|&j| row[j]).map(move |j| (i, j)))
        .collect()
}

/// Dense symmetric matrix of pairwise interaction weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl InteractionMatrix {
    /// Wraps a row-major `n x n` matrix after checking symmetry, a zero
    /// diagonal, and finite non-negative entries.
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self, InstanceError> {
        if data.len() != n * n {
            return Err(InstanceError::InvalidMatrix(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(InstanceError::InvalidMatrix(format!(
                    "diagonal entry ({i}, {i}) is not zero"
                )));
            }
            for j in 0..n {
                let v = data[i * n + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(InstanceError::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v} is not a finite non-negative weight"
                    )));
                }
                if v != data[j * n + i] {
                    return Err(InstanceError::InvalidMatrix(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, InstanceError> {
        let n = rows.len();
        if let Some(r) = rows.iter().position(|r| r.len() != n) {
            return Err(InstanceError::InvalidMatrix(format!(
                "row {r} does not have {n} entries"
            )));
        }
        Self::from_dense(n, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    /// Largest off-diagonal entry, `None` when `n < 2`.
    pub fn max_off_diagonal(&self) -> Option<f64> {
        let n = self.n;
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .max_by(f64::total_cmp)
    }
}

impl fmt::Display for InteractionMatrix {
    /// CSV, one row per line, shortest round-trip float formatting.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// `u_ij = 1/d_ij^6` over every pair of sites (not only bonded ones).
pub fn interaction_matrix(inst: &Instance) -> Result<InteractionMatrix, InstanceError> {
    let n = inst.n();
    let sites = inst.sites();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (sites[i][0] - sites[j][0], sites[i][1] - sites[j][1]);
            let d2 = dx * dx + dy * dy;
            if d2 == 0.0 {
                return Err(InstanceError::CoincidentSites(i, j));
            }
            let u = 1.0 / (d2 * d2 * d2);
            data[i * n + j] = u;
            data[j * n + i] = u;
        }
    }
    Ok(InteractionMatrix { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Instance {
        let sites = xs.iter().map(|&x| [x, 0.0]).collect();
        Instance::new("line", 0, GenParams::for_n(xs.len()), sites, vec![]).unwrap()
    }

    #[test]
    fn smallest_instance() {
        let inst = generate(2, 7, GenParams::for_n(2)).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.bonds(), &[(0, 1)]);
        assert!(inst.distance(0, 1) >= 0.7);
    }

    #[test]
    fn mean_degree_near_four() {
        let inst = generate(30, 1, GenParams::for_n(30)).unwrap();
        let deg = inst.degrees();
        let mean = deg.iter().sum::<usize>() as f64 / deg.len() as f64;
        assert!((3.5..=4.5).contains(&mean), "mean degree {mean}");
        assert!(deg.iter().all(|&d| d >= MIN_DEGREE));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(30, 1, GenParams::for_n(30)).unwrap().to_json();
        let b = generate(30, 1, GenParams::for_n(30)).unwrap().to_json();
        assert_eq!(a, b);
        let c = generate(30, 2, GenParams::for_n(30)).unwrap().to_json();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(matches!(
            generate(1, 0, GenParams::for_n(1)),
            Err(InstanceError::InvalidParams(_))
        ));
        let dense = GenParams {
            box_side: 1.0,
            r_min: 0.5,
        };
        assert!(matches!(
            generate(4, 0, dense),
            Err(InstanceError::InvalidParams(_))
        ));
    }

    #[test]
    fn packing_failure_is_reported() {
        // Passes the area check but cannot be packed: 30 discs of diameter 0.95 in a 5.3 box.
        let tight = GenParams {
            box_side: 5.3,
            r_min: 0.95,
        };
        match generate(30, 0, tight) {
            Err(InstanceError::GenerationFailed { n, placed, .. }) => {
                assert_eq!(n, 30);
                assert!(placed < 30);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn unit_and_double_distance() {
        let u = line(&[0.0, 1.0]).interaction_matrix().unwrap();
        assert_eq!(u.to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let u = line(&[0.0, 2.0]).interaction_matrix().unwrap();
        assert_eq!(u.get(0, 1), 1.0 / 64.0);
    }

    #[test]
    fn collinear_three() {
        let u = line(&[0.0, 1.0, 3.0]).interaction_matrix().unwrap();
        assert_eq!(u.get(0, 1), 1.0);
        assert_eq!(u.get(1, 2), 1.0 / 64.0);
        assert_eq!(u.get(0, 2), 1.0 / 729.0);
    }

    #[test]
    fn coincident_sites_rejected() {
        let err = Instance::new(
            "x",
            0,
            GenParams::for_n(3),
            vec![[0.0, 0.0], [1.0, 1.0], [1.0, 1.0]],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, InstanceError::CoincidentSites(1, 2)));
    }

    #[test]
    fn bonds_are_validated() {
        let sites = vec![[0.0, 0.0], [1.0, 0.0]];
        let p = GenParams::for_n(2);
        assert!(matches!(
            Instance::new("x", 0, p, sites.clone(), vec![(0, 2)]),
            Err(InstanceError::InvalidBond(0, 2, 2))
        ));
        assert!(matches!(
            Instance::new("x", 0, p, sites.clone(), vec![(0, 1), (1, 0)]),
            Err(InstanceError::DuplicateBond(0, 1))
        ));
        let inst = Instance::new("x", 0, p, sites, vec![(1, 0)]).unwrap();
        assert_eq!(inst.bonds(), &[(0, 1)]);
    }

    #[test]
    fn json_layout() {
        let inst = Instance::new(
            "tiny",
            5,
            GenParams {
                box_side: 2.0,
                r_min: 0.5,
            },
            vec![[0.0, 0.0], [1.5, 0.25]],
            vec![(0, 1)],
        )
        .unwrap();
        assert_eq!(
            inst.to_json(),
            "{\"schema\":\"bandopt-instance/1\",\"id\":\"tiny\",\"seed\":5,\
             \"params\":{\"L\":2.0,\"r_min\":0.5},\"sites\":[[0.0,0.0],[1.5,0.25]],\
             \"bonds\":[[0,1]]}\n"
        );
        assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn load_errors_name_the_problem() {
        let missing = r#"{"schema":"bandopt-instance/1","id":"a","seed":1,"params":{"L":2.0,"r_min":0.5},"bonds":[]}"#;
        assert!(matches!(
            Instance::from_json(missing),
            Err(InstanceError::MissingField("sites"))
        ));
        let wrong = r#"{"schema":"bandopt-instance/2","id":"a","seed":1,"params":{"L":2.0,"r_min":0.5},"sites":[],"bonds":[]}"#;
        assert!(matches!(
            Instance::from_json(wrong),
            Err(InstanceError::SchemaMismatch { .. })
        ));
        let dup = r#"{"schema":"bandopt-instance/1","id":"a","seed":1,"params":{"L":2.0,"r_min":0.5},"sites":[[0.5,0.5],[0.5,0.5]],"bonds":[]}"#;
        assert!(matches!(
            Instance::from_json(dup),
            Err(InstanceError::CoincidentSites(0, 1))
        ));
        let reversed = r#"{"schema":"bandopt-instance/1","id":"a","seed":1,"params":{"L":2.0,"r_min":0.5},"sites":[[0,0],[1,1]],"bonds":[[1,0]]}"#;
        assert!(matches!(
            Instance::from_json(reversed),
            Err(InstanceError::InvalidBond(1, 0, 2))
        ));
        assert!(matches!(
            Instance::from_json("{not json"),
            Err(InstanceError::Malformed(_))
        ));
    }

    #[test]
    fn raw_matrix_validation() {
        assert!(InteractionMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(InteractionMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(InteractionMatrix::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(InteractionMatrix::from_rows(&[vec![0.0, 1.0]]).is_err());
        let m = InteractionMatrix::from_rows(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(m.max_off_diagonal(), Some(3.0));
        assert_eq!(m.to_string(), "0,3\n3,0\n");
    }
}
