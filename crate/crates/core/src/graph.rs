//! Dynamic-network data model, snapshot adjacency construction, and the
//! symmetric normalization filter, plus the text interchange formats shared
//! by the CLI and the benchmark generator.
//!
//! Snapshot file:
//! ```text
//! n <node_count> t <snapshot_count>
//! snapshot 1
//! <src> <dst>
//! ...
//! snapshot 2
//! ...
//! ```
//! Ground-truth / partition file: `snapshot <t>` blocks of `<node> <label>`
//! lines. Ids are 0-based; snapshot indices are 1-based.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::num::{Matrix, Scalar};

/// Node -> community labels for one snapshot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub t: usize,
    pub labels: Vec<usize>,
}

impl Partition {
    pub fn new(t: usize, labels: Vec<usize>) -> Self {
        Self { t, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct communities.
    pub fn community_count(&self) -> usize {
        self.labels.iter().collect::<BTreeSet<_>>().len()
    }

    /// Relabels community ids to 0..k-1 in order of first appearance.
    pub fn compacted(&self) -> Partition {
        let mut map = std::collections::BTreeMap::new();
        let mut next = 0usize;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                *map.entry(l).or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                })
            })
            .collect();
        Partition { t: self.t, labels }
    }
}

/// Fixed node set plus an ordered sequence of undirected snapshot edge sets,
/// with optional per-snapshot ground-truth partitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicNetwork {
    node_count: usize,
    /// Per snapshot: sorted, deduplicated edges stored as (min, max).
    snapshots: Vec<Vec<(usize, usize)>>,
    ground_truth: Option<Vec<Partition>>,
}

impl DynamicNetwork {
    /// Builds from per-snapshot edge lists. Edges may arrive in either
    /// orientation; self-loops and out-of-range ids are rejected.
    pub fn new(node_count: usize, snapshots: Vec<Vec<(usize, usize)>>) -> Result<Self> {
        let mut canon = Vec::with_capacity(snapshots.len());
        for (k, edges) in snapshots.iter().enumerate() {
            let mut set = BTreeSet::new();
            for &(a, b) in edges {
                if a == b {
                    return Err(Error::InvalidConfig(format!(
                        "snapshot {}: self-loop on node {a}",
                        k + 1
                    )));
                }
                if a >= node_count || b >= node_count {
                    return Err(Error::InvalidConfig(format!(
                        "snapshot {}: edge ({a},{b}) outside node range 0..{node_count}",
                        k + 1
                    )));
                }
                set.insert((a.min(b), a.max(b)));
            }
            canon.push(set.into_iter().collect());
        }
        Ok(Self { node_count, snapshots: canon, ground_truth: None })
    }

    /// Attaches ground truth; must label every node in every snapshot.
    pub fn with_ground_truth(mut self, truth: Vec<Partition>) -> Result<Self> {
        if truth.len() != self.snapshot_count() {
            return Err(Error::LengthMismatch(format!(
                "ground truth has {} snapshots, network has {}",
                truth.len(),
                self.snapshot_count()
            )));
        }
        for p in &truth {
            if p.labels.len() != self.node_count {
                return Err(Error::NodeSetMismatch(format!(
                    "ground truth at snapshot {} labels {} nodes, network has {}",
                    p.t,
                    p.labels.len(),
                    self.node_count
                )));
            }
        }
        self.ground_truth = Some(truth);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshots.len()
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.snapshot_count() {
            return Err(Error::SnapshotOutOfRange { t, max: self.snapshot_count() });
        }
        Ok(())
    }

    /// Canonical (min,max) edges of snapshot `t` (1-based).
    pub fn edges(&self, t: usize) -> Result<&[(usize, usize)]> {
        self.check_t(t)?;
        Ok(&self.snapshots[t - 1])
    }

    pub fn ground_truth(&self) -> Option<&[Partition]> {
        self.ground_truth.as_deref()
    }

    pub fn has_edge(&self, t: usize, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.snapshots[t - 1].binary_search(&key).is_ok()
    }

    /// Sorted neighbor lists at snapshot `t`.
    pub fn neighbor_lists(&self, t: usize) -> Result<Vec<Vec<usize>>> {
        self.check_t(t)?;
        let mut adj = vec![Vec::new(); self.node_count];
        for &(a, b) in &self.snapshots[t - 1] {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(adj)
    }

    /// Binary symmetric adjacency matrix of snapshot `t`, zero diagonal.
    pub fn build_adjacency<S: Scalar>(&self, t: usize) -> Result<Matrix<S>> {
        self.check_t(t)?;
        let n = self.node_count;
        let mut a = Matrix::zeros(n, n);
        for &(i, j) in &self.snapshots[t - 1] {
            a.set(i, j, S::one());
            a.set(j, i, S::one());
        }
        Ok(a)
    }

    /// Adjacency, normalized filter, and degrees for snapshot `t`.
    pub fn snapshot_matrices<S: Scalar>(&self, t: usize) -> Result<SnapshotMatrices<S>> {
        let a = self.build_adjacency::<S>(t)?;
        let a_hat = normalize_adjacency(&a)?;
        let degrees = degree_vector(&a);
        Ok(SnapshotMatrices { a, a_hat, degrees })
    }
}

/// Matrices derived from one snapshot.
pub struct SnapshotMatrices<S> {
    /// Binary symmetric adjacency, zero diagonal.
    pub a: Matrix<S>,
    /// D^{-1/2} (A + I) D^{-1/2}.
    pub a_hat: Matrix<S>,
    /// Per-node degree (self-loop not counted).
    pub degrees: Vec<usize>,
}

/// Symmetric normalization with self-loops: D^{-1/2} (A + I) D^{-1/2} where
/// D is the row-sum diagonal of A + I. Isolated nodes get degree 1 from the
/// self-loop, so no division by zero occurs.
pub fn normalize_adjacency<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::ShapeMismatch {
            op: "normalize_adjacency",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: n,
            right_cols: n,
        });
    }
    let mut inv_sqrt = vec![S::zero(); n];
    for i in 0..n {
        let mut deg = S::one(); // self-loop
        for j in 0..n {
            deg += a.get(i, j);
        }
        inv_sqrt[i] = S::one() / deg.sqrt();
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let aug = if i == j { a.get(i, j) + S::one() } else { a.get(i, j) };
            out.set(i, j, inv_sqrt[i] * aug * inv_sqrt[j]);
        }
    }
    Ok(out)
}

/// Row sums of the raw adjacency (degree without self-loop).
pub fn degree_vector<S: Scalar>(a: &Matrix<S>) -> Vec<usize> {
    (0..a.rows())
        .map(|i| a.row(i).iter().map(|v| v.as_f64()).sum::<f64>().round() as usize)
        .collect()
}

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

fn parse_err(file: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { file: file.to_string(), line, msg: msg.into() }
}

/// Parses the snapshot format from any reader. `name` is used in errors.
pub fn parse_snapshots(reader: impl Read, name: &str) -> Result<DynamicNetwork> {
    let reader = BufReader::new(reader);
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(line?);
    }
    let mut it = lines.iter().enumerate();

    let (mut n, mut t_count) = (None, None);
    for (ln, raw) in it.by_ref() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "n" || fields[2] != "t" {
            return Err(parse_err(name, ln + 1, "expected header `n <nodes> t <snapshots>`"));
        }
        n = Some(parse_usize(fields[1], name, ln + 1, "node count")?);
        t_count = Some(parse_usize(fields[3], name, ln + 1, "snapshot count")?);
        break;
    }
    let (Some(n), Some(t_count)) = (n, t_count) else {
        return Err(parse_err(name, 1, "missing header line"));
    };

    let mut snapshots: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (ln, raw) in it {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "snapshot" {
            if fields.len() != 2 {
                return Err(parse_err(name, ln + 1, "expected `snapshot <t>`"));
            }
            let idx = parse_usize(fields[1], name, ln + 1, "snapshot index")?;
            if idx != snapshots.len() + 1 {
                return Err(parse_err(
                    name,
                    ln + 1,
                    format!("snapshot {idx} out of order; expected {}", snapshots.len() + 1),
                ));
            }
            snapshots.push(Vec::new());
            seen.clear();
            continue;
        }
        if snapshots.is_empty() {
            return Err(parse_err(name, ln + 1, "edge line before any `snapshot` marker"));
        }
        if fields.len() != 2 {
            return Err(parse_err(
                name,
                ln + 1,
                "expected `<src> <dst>`; weighted or attributed edges are not supported",
            ));
        }
        let a = parse_usize(fields[0], name, ln + 1, "src")?;
        let b = parse_usize(fields[1], name, ln + 1, "dst")?;
        if a == b {
            return Err(parse_err(name, ln + 1, format!("self-loop on node {a}")));
        }
        if a >= n || b >= n {
            return Err(parse_err(name, ln + 1, format!("node id out of range 0..{n}")));
        }
        // The format declares undirected edges once; a reversed duplicate is a
        // directed-input smell and gets rejected instead of symmetrized.
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(parse_err(name, ln + 1, format!("duplicate edge ({a},{b})")));
        }
        snapshots.last_mut().unwrap().push((a, b));
    }
    if snapshots.len() != t_count {
        return Err(parse_err(
            name,
            lines.len(),
            format!("header declares {t_count} snapshots, found {}", snapshots.len()),
        ));
    }
    DynamicNetwork::new(n, snapshots)
}

/// Parses a ground-truth / partition file. `node_count` fixes the node set;
/// every snapshot block must label all of it.
pub fn parse_partitions(reader: impl Read, name: &str, node_count: usize) -> Result<Vec<Partition>> {
    let reader = BufReader::new(reader);
    let mut parts: Vec<Vec<Option<usize>>> = Vec::new();
    let mut last_line = 0usize;
    for (ln, raw) in reader.lines().enumerate() {
        let raw = raw?;
        last_line = ln + 1;
        let line = strip_comment(&raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "snapshot" {
            if fields.len() != 2 {
                return Err(parse_err(name, ln + 1, "expected `snapshot <t>`"));
            }
            let idx = parse_usize(fields[1], name, ln + 1, "snapshot index")?;
            if idx != parts.len() + 1 {
                return Err(parse_err(
                    name,
                    ln + 1,
                    format!("snapshot {idx} out of order; expected {}", parts.len() + 1),
                ));
            }
            parts.push(vec![None; node_count]);
            continue;
        }
        if parts.is_empty() {
            return Err(parse_err(name, ln + 1, "label line before any `snapshot` marker"));
        }
        if fields.len() != 2 {
            return Err(parse_err(name, ln + 1, "expected `<node> <label>`"));
        }
        let node = parse_usize(fields[0], name, ln + 1, "node")?;
        let label = parse_usize(fields[1], name, ln + 1, "label")?;
        if node >= node_count {
            return Err(parse_err(name, ln + 1, format!("node id out of range 0..{node_count}")));
        }
        let slot = &mut parts.last_mut().unwrap()[node];
        if slot.is_some() {
            return Err(parse_err(name, ln + 1, format!("node {node} labeled twice")));
        }
        *slot = Some(label);
    }
    let mut out = Vec::with_capacity(parts.len());
    for (k, labels) in parts.into_iter().enumerate() {
        let mut filled = Vec::with_capacity(node_count);
        for (node, l) in labels.into_iter().enumerate() {
            match l {
                Some(l) => filled.push(l),
                None => {
                    return Err(parse_err(
                        name,
                        last_line,
                        format!("snapshot {}: node {node} has no label", k + 1),
                    ))
                }
            }
        }
        out.push(Partition::new(k + 1, filled));
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}

fn parse_usize(s: &str, file: &str, line: usize, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| parse_err(file, line, format!("invalid {what}: `{s}`")))
}

pub fn write_snapshots(w: &mut impl Write, net: &DynamicNetwork) -> Result<()> {
    writeln!(w, "n {} t {}", net.node_count(), net.snapshot_count())?;
    for t in 1..=net.snapshot_count() {
        writeln!(w, "snapshot {t}")?;
        for &(a, b) in net.edges(t)? {
            writeln!(w, "{a} {b}")?;
        }
    }
    Ok(())
}

pub fn write_partitions(w: &mut impl Write, parts: &[Partition]) -> Result<()> {
    for p in parts {
        writeln!(w, "snapshot {}", p.t)?;
        for (node, label) in p.labels.iter().enumerate() {
            writeln!(w, "{node} {label}")?;
        }
    }
    Ok(())
}

pub fn load_network(snapshots_path: &Path, truth_path: Option<&Path>) -> Result<DynamicNetwork> {
    let file = std::fs::File::open(snapshots_path)?;
    let net = parse_snapshots(file, &snapshots_path.display().to_string())?;
    match truth_path {
        Some(tp) => {
            let file = std::fs::File::open(tp)?;
            let truth = parse_partitions(file, &tp.display().to_string(), net.node_count())?;
            net.with_ground_truth(truth)
        }
        None => Ok(net),
    }
}

pub fn save_network(
    net: &DynamicNetwork,
    snapshots_path: &Path,
    truth_path: Option<&Path>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(snapshots_path)?);
    write_snapshots(&mut f, net)?;
    f.flush()?;
    if let (Some(tp), Some(truth)) = (truth_path, net.ground_truth()) {
        let mut f = std::io::BufWriter::new(std::fs::File::create(tp)?);
        write_partitions(&mut f, truth)?;
        f.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{seeded_rng, Prng};
    use crate::Mat;
    use rand::Rng;

    fn net3() -> DynamicNetwork {
        DynamicNetwork::new(3, vec![vec![(0, 1)]]).unwrap()
    }

    #[test]
    fn empty_edge_set_gives_zero_matrix() {
        let net = DynamicNetwork::new(3, vec![vec![]]).unwrap();
        let a: Mat = net.build_adjacency(1).unwrap();
        assert_eq!(a, Mat::zeros(3, 3));
    }

    #[test]
    fn single_edge_adjacency() {
        let a: Mat = net3().build_adjacency(1).unwrap();
        let mut expect = Mat::zeros(3, 3);
        expect.set(0, 1, 1.0);
        expect.set(1, 0, 1.0);
        assert_eq!(a, expect);
    }

    #[test]
    fn triangle_adjacency_all_off_diagonal() {
        let net = DynamicNetwork::new(3, vec![vec![(0, 1), (1, 2), (0, 2)]]).unwrap();
        let a: Mat = net.build_adjacency(1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.get(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn snapshot_index_out_of_range() {
        assert!(net3().build_adjacency::<f64>(0).is_err());
        assert!(net3().build_adjacency::<f64>(2).is_err());
    }

    #[test]
    fn normalize_isolated_single_node() {
        let a = Mat::zeros(1, 1);
        let ah = normalize_adjacency(&a).unwrap();
        assert_eq!(ah.get(0, 0), 1.0);
    }

    #[test]
    fn normalize_single_edge_pair() {
        let mut a = Mat::zeros(2, 2);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        let ah = normalize_adjacency(&a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((ah.get(i, j) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalize_path_graph_hand_values() {
        // path 0-1-2: augmented degrees are (2, 3, 2)
        let net = DynamicNetwork::new(3, vec![vec![(0, 1), (1, 2)]]).unwrap();
        let m = net.snapshot_matrices::<f64>(1).unwrap();
        assert!((m.a_hat.get(0, 1) - 1.0 / 6.0_f64.sqrt()).abs() < 1e-12);
        assert!((m.a_hat.get(1, 1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.a_hat.get(0, 0) - 0.5).abs() < 1e-12);
        assert_eq!(m.degrees, vec![1, 2, 1]);
    }

    #[test]
    fn degree_vector_cases() {
        let zero = Mat::zeros(4, 4);
        assert_eq!(degree_vector(&zero), vec![0, 0, 0, 0]);
        let star = DynamicNetwork::new(4, vec![vec![(0, 1), (0, 2), (0, 3)]]).unwrap();
        let a: Mat = star.build_adjacency(1).unwrap();
        assert_eq!(degree_vector(&a), vec![3, 1, 1, 1]);
        let tri = DynamicNetwork::new(3, vec![vec![(0, 1), (1, 2), (0, 2)]]).unwrap();
        let a: Mat = tri.build_adjacency(1).unwrap();
        assert_eq!(degree_vector(&a), vec![2, 2, 2]);
    }

    fn random_network(rng: &mut Prng, n: usize, p: f64, t_count: usize) -> DynamicNetwork {
        let mut snaps = Vec::new();
        for _ in 0..t_count {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.gen::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            snaps.push(edges);
        }
        DynamicNetwork::new(n, snaps).unwrap()
    }

    /// Power iteration for the dominant |eigenvalue| of a symmetric matrix.
    fn spectral_radius(m: &Mat, iters: usize) -> f64 {
        let n = m.rows();
        let mut v = Mat::filled(n, 1, 1.0 / (n as f64).sqrt());
        let mut lambda = 0.0;
        for _ in 0..iters {
            let w = m.matmul(&v).unwrap();
            let norm = w.data().iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            v = w.scale(1.0 / norm);
        }
        lambda
    }

    #[test]
    fn normalized_adjacency_symmetric_and_spectrally_bounded() {
        let mut rng = seeded_rng(99);
        for _ in 0..25 {
            let n = rng.gen_range(2..20);
            let p = rng.gen_range(0.05..0.6);
            let net = random_network(&mut rng, n, p, 1);
            let ah: Mat = net.snapshot_matrices(1).unwrap().a_hat;
            assert!(ah.max_abs_diff(&ah.transpose()) < 1e-12);
            assert!(spectral_radius(&ah, 200) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn file_round_trip_preserves_network() {
        let mut rng = seeded_rng(5);
        let net = random_network(&mut rng, 12, 0.3, 4);
        let truth: Vec<Partition> = (1..=4)
            .map(|t| Partition::new(t, (0..12).map(|i| i % 3).collect()))
            .collect();
        let net = net.with_ground_truth(truth).unwrap();

        let mut snap_buf = Vec::new();
        write_snapshots(&mut snap_buf, &net).unwrap();
        let mut truth_buf = Vec::new();
        write_partitions(&mut truth_buf, net.ground_truth().unwrap()).unwrap();

        let read = parse_snapshots(&snap_buf[..], "mem").unwrap();
        let parts = parse_partitions(&truth_buf[..], "mem", 12).unwrap();
        let read = read.with_ground_truth(parts).unwrap();
        assert_eq!(read, net);
        for t in 1..=4 {
            assert_eq!(
                read.build_adjacency::<f64>(t).unwrap(),
                net.build_adjacency::<f64>(t).unwrap()
            );
        }
    }

    #[test]
    fn loader_rejects_weighted_and_duplicate_edges() {
        let weighted = "n 3 t 1\nsnapshot 1\n0 1 2.5\n";
        let err = parse_snapshots(weighted.as_bytes(), "w").unwrap_err();
        assert!(err.to_string().contains("w:3"), "{err}");

        let dup = "n 3 t 1\nsnapshot 1\n0 1\n1 0\n";
        let err = parse_snapshots(dup.as_bytes(), "d").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn loader_rejects_self_loops_and_bad_ids() {
        assert!(parse_snapshots("n 3 t 1\nsnapshot 1\n1 1\n".as_bytes(), "s").is_err());
        assert!(parse_snapshots("n 3 t 1\nsnapshot 1\n0 3\n".as_bytes(), "r").is_err());
    }

    #[test]
    fn partition_file_requires_full_labeling() {
        let missing = "snapshot 1\n0 0\n1 0\n";
        let err = parse_partitions(missing.as_bytes(), "p", 3).unwrap_err();
        assert!(err.to_string().contains("no label"), "{err}");
    }
}
