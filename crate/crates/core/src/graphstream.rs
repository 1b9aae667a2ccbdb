//! Edge-stream ingestion, snapshot partitioning, train/test split and
//! anomaly injection.
//!
//! A stream is a list of timestamped interactions. After ingestion it is an
//! ordered list of undirected, unweighted snapshots over one shared node
//! universe: a node that is silent in a snapshot is still addressable there,
//! it just has degree zero.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index into the stream's node universe.
pub type NodeId = u32;

/// An undirected node pair stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
}

impl Edge {
    /// Canonical pair, or `None` for a self-loop.
    pub fn new(a: NodeId, b: NodeId) -> Option<Edge> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Edge { u: a, v: b }),
            std::cmp::Ordering::Greater => Some(Edge { u: b, v: a }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// One interaction after id remapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeEvent {
    pub src: NodeId,
    pub dst: NodeId,
    pub time: u64,
}

/// How the deduplicated event stream is cut into snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnapshotMode {
    /// Consecutive chunks of `n` edges; the last chunk may be shorter.
    /// Repeated pairs are removed over the whole stream.
    FixedSize(usize),
    /// One snapshot per distinct timestamp value, for streams that are
    /// already discretized (e.g. generated ones). Repeated pairs are removed
    /// within each snapshot only.
    PerTimestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub mode: SnapshotMode,
}

impl IngestOptions {
    pub fn fixed_size(edges_per_snapshot: usize) -> Self {
        IngestOptions {
            mode: SnapshotMode::FixedSize(edges_per_snapshot),
        }
    }

    fn validate(&self) -> Result<()> {
        if let SnapshotMode::FixedSize(0) = self.mode {
            return Err(Error::Config("snapshot size must be positive".into()));
        }
        Ok(())
    }
}

/// A single discrete graph of the stream.
///
/// Adjacency is kept in CSR form over the full node universe so that BFS and
/// degree lookups need no hashing.
#[derive(Debug, Clone)]
pub struct Snapshot {
    index: usize,
    edges: Vec<Edge>,
    edge_set: HashSet<Edge>,
    offsets: Vec<u32>,
    neighbors: Vec<NodeId>,
}

impl Snapshot {
    /// Builds a snapshot, dropping self-loops and repeated pairs (first
    /// occurrence wins).
    pub fn new(
        index: usize,
        node_count: usize,
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        let mut edges = Vec::new();
        let mut edge_set = HashSet::new();
        for (a, b) in pairs {
            if a as usize >= node_count || b as usize >= node_count {
                return Err(Error::OutOfRange(format!(
                    "edge ({a}, {b}) in snapshot {index} exceeds node count {node_count}"
                )));
            }
            if let Some(e) = Edge::new(a, b) {
                if edge_set.insert(e) {
                    edges.push(e);
                }
            }
        }

        let mut degree = vec![0u32; node_count];
        for e in &edges {
            degree[e.u as usize] += 1;
            degree[e.v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0u32);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..node_count].to_vec();
        let mut neighbors = vec![0; edges.len() * 2];
        for e in &edges {
            neighbors[fill[e.u as usize] as usize] = e.v;
            fill[e.u as usize] += 1;
            neighbors[fill[e.v as usize] as usize] = e.u;
            fill[e.v as usize] += 1;
        }
        for v in 0..node_count {
            neighbors[offsets[v] as usize..offsets[v + 1] as usize].sort_unstable();
        }

        Ok(Snapshot {
            index,
            edges,
            edge_set,
            offsets,
            neighbors,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Size of the shared node universe, not just the active nodes.
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn contains(&self, a: NodeId, b: NodeId) -> bool {
        Edge::new(a, b).is_some_and(|e| self.edge_set.contains(&e))
    }

    pub fn degree(&self, v: NodeId) -> usize {
        let v = v as usize;
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.neighbors[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    /// Nodes with at least one edge, ascending.
    pub fn active_nodes(&self) -> Vec<NodeId> {
        (0..self.node_count() as NodeId)
            .filter(|&v| self.degree(v) > 0)
            .collect()
    }

    pub fn active_node_count(&self) -> usize {
        (0..self.node_count() as NodeId)
            .filter(|&v| self.degree(v) > 0)
            .count()
    }
}

/// The discrete dynamic graph: an ordered list of snapshots sharing one node
/// universe.
#[derive(Debug, Clone)]
pub struct GraphStream {
    snapshots: Vec<Snapshot>,
    original_ids: Vec<u64>,
}

impl GraphStream {
    /// Builds a stream from per-snapshot pair lists over `0..node_count`.
    /// Original ids are the dense ids themselves.
    pub fn from_snapshot_pairs(
        node_count: usize,
        snapshots: Vec<Vec<(NodeId, NodeId)>>,
    ) -> Result<Self> {
        let snapshots = snapshots
            .into_iter()
            .enumerate()
            .map(|(t, pairs)| Snapshot::new(t, node_count, pairs))
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphStream {
            snapshots,
            original_ids: (0..node_count as u64).collect(),
        })
    }

    /// Builds a stream from events that already carry dense ids.
    pub fn from_events(
        node_count: usize,
        events: &[EdgeEvent],
        options: &IngestOptions,
    ) -> Result<Self> {
        options.validate()?;
        let mut events = events.to_vec();
        events.sort_by_key(|e| e.time);
        let chunks = chunk_events(&events, options.mode);
        Self::from_snapshot_pairs(node_count, chunks)
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> Option<&Snapshot> {
        self.snapshots.get(t)
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.original_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.snapshots.iter().map(Snapshot::edge_count).sum()
    }

    /// Original identifier of a dense node id.
    pub fn original_id(&self, v: NodeId) -> u64 {
        self.original_ids[v as usize]
    }

    pub fn manifest(&self) -> StreamManifest {
        StreamManifest {
            snapshot_count: self.len(),
            node_count: self.node_count(),
            edge_count: self.edge_count(),
            snapshots: self
                .snapshots
                .iter()
                .map(|s| SnapshotSummary {
                    index: s.index(),
                    edge_count: s.edge_count(),
                    node_count: s.active_node_count(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub index: usize,
    pub edge_count: usize,
    /// Nodes with at least one edge in this snapshot.
    pub node_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamManifest {
    pub snapshot_count: usize,
    pub node_count: usize,
    pub edge_count: usize,
    pub snapshots: Vec<SnapshotSummary>,
}

/// A raw `src dst timestamp` record before id remapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawEvent {
    pub src: u64,
    pub dst: u64,
    pub time: u64,
}

/// Parses one event per line. Blank lines and lines starting with `#` or `%`
/// are skipped. Fields are separated by whitespace runs or by single commas.
/// Lines with four or more fields (`src dst weight timestamp`, the KONECT
/// layout) take the last field as the timestamp.
pub fn parse_edge_list(reader: impl BufRead, path: &Path) -> Result<Vec<RawEvent>> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains(',') {
            trimmed.split(',').map(str::trim).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        if fields.len() < 3 {
            return Err(parse_err(format!(
                "expected `src dst timestamp`, found {} field(s)",
                fields.len()
            )));
        }
        let num = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|_| parse_err(format!("{what} `{s}` is not a non-negative integer")))
        };
        events.push(RawEvent {
            src: num(fields[0], "source id")?,
            dst: num(fields[1], "target id")?,
            time: num(fields[fields.len() - 1], "timestamp")?,
        });
    }
    Ok(events)
}

/// Reads an edge-list file and turns it into a snapshot stream.
///
/// Events are stably sorted by timestamp and self-loops dropped. Under
/// `FixedSize` the repeated undirected pairs are removed over the whole
/// stream, keeping the first occurrence, and the remainder is cut into
/// consecutive chunks. Node ids are remapped densely in order of first
/// appearance.
pub fn ingest_edge_list(path: impl AsRef<Path>, options: &IngestOptions) -> Result<GraphStream> {
    let path = path.as_ref();
    options.validate()?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let raw = parse_edge_list(BufReader::new(file), path)?;
    if raw.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} contains no events",
            path.display()
        )));
    }
    stream_from_raw(raw, options)
}

/// Same as [`ingest_edge_list`] on already-parsed records.
pub fn stream_from_raw(mut raw: Vec<RawEvent>, options: &IngestOptions) -> Result<GraphStream> {
    options.validate()?;
    raw.sort_by_key(|e| e.time);
    raw.retain(|e| e.src != e.dst);
    if let SnapshotMode::FixedSize(_) = options.mode {
        let mut seen = HashSet::new();
        raw.retain(|e| seen.insert((e.src.min(e.dst), e.src.max(e.dst))));
    }

    let mut dense: HashMap<u64, NodeId> = HashMap::new();
    let mut original_ids = Vec::new();
    let mut intern = |id: u64| {
        *dense.entry(id).or_insert_with(|| {
            original_ids.push(id);
            (original_ids.len() - 1) as NodeId
        })
    };
    let events: Vec<EdgeEvent> = raw
        .iter()
        .map(|e| EdgeEvent {
            src: intern(e.src),
            dst: intern(e.dst),
            time: e.time,
        })
        .collect();

    let node_count = original_ids.len();
    let chunks = chunk_events(&events, options.mode);
    let mut gs = GraphStream::from_snapshot_pairs(node_count, chunks)?;
    gs.original_ids = original_ids;
    Ok(gs)
}

fn chunk_events(events: &[EdgeEvent], mode: SnapshotMode) -> Vec<Vec<(NodeId, NodeId)>> {
    match mode {
        SnapshotMode::FixedSize(size) => {
            // Dedup happens before chunking so each chunk keeps `size` edges.
            let mut seen = HashSet::new();
            let unique: Vec<(NodeId, NodeId)> = events
                .iter()
                .filter_map(|e| Edge::new(e.src, e.dst))
                .filter(|e| seen.insert(*e))
                .map(|e| (e.u, e.v))
                .collect();
            unique.chunks(size).map(<[_]>::to_vec).collect()
        }
        SnapshotMode::PerTimestamp => {
            let mut out: Vec<Vec<(NodeId, NodeId)>> = Vec::new();
            let mut current = None;
            for e in events {
                if current != Some(e.time) {
                    out.push(Vec::new());
                    current = Some(e.time);
                }
                out.last_mut().unwrap().push((e.src, e.dst));
            }
            out
        }
    }
}

/// Splits snapshot indices into a leading training range and a trailing test
/// range. Both must be non-empty.
pub fn split_train_test(
    gs: &GraphStream,
    train_ratio: f64,
) -> Result<(Range<usize>, Range<usize>)> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::Config(format!(
            "train ratio must be in (0, 1), got {train_ratio}"
        )));
    }
    let total = gs.len();
    if total < 2 {
        return Err(Error::Data(format!(
            "need at least 2 snapshots to split, stream has {total}"
        )));
    }
    let train = (total as f64 * train_ratio).floor() as usize;
    if train == 0 || train == total {
        return Err(Error::Config(format!(
            "train ratio {train_ratio} leaves an empty side for {total} snapshots"
        )));
    }
    Ok((0..train, train..total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Anomalous => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTestEdge {
    pub edge: Edge,
    pub snapshot: usize,
    pub label: Label,
}

/// Labels every original edge of the test snapshots as normal and adds
/// `round(p_a * m_t)` random node pairs per snapshot as anomalies. Injected
/// pairs are absent from their snapshot and distinct from one another.
pub fn inject_anomalies(
    gs: &GraphStream,
    test: Range<usize>,
    p_a: f64,
    seed: u64,
) -> Result<Vec<LabeledTestEdge>> {
    inject_anomalies_where(gs, test, p_a, seed, |_, _, _| true)
}

/// [`inject_anomalies`] restricted to pairs for which `accept(t, u, v)` holds.
pub fn inject_anomalies_where(
    gs: &GraphStream,
    test: Range<usize>,
    p_a: f64,
    seed: u64,
    accept: impl Fn(usize, NodeId, NodeId) -> bool,
) -> Result<Vec<LabeledTestEdge>> {
    if !(0.0..1.0).contains(&p_a) {
        return Err(Error::Config(format!(
            "anomaly proportion must be in [0, 1), got {p_a}"
        )));
    }
    if test.end > gs.len() {
        return Err(Error::OutOfRange(format!(
            "test range {test:?} exceeds {} snapshots",
            gs.len()
        )));
    }
    let n = gs.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    for t in test {
        let snap = &gs.snapshots()[t];
        out.extend(snap.edges().iter().map(|&edge| LabeledTestEdge {
            edge,
            snapshot: t,
            label: Label::Normal,
        }));

        let pair_count = n * n.saturating_sub(1) / 2;
        if p_a > 0.0 && snap.edge_count() >= pair_count {
            return Err(Error::Data(format!(
                "snapshot {t} is complete; no disconnected pair left to inject"
            )));
        }
        let needed = (p_a * snap.edge_count() as f64).round() as usize;
        let cap = 100 * needed;
        let mut injected = HashSet::with_capacity(needed);
        let mut attempts = 0;
        while injected.len() < needed {
            if attempts >= cap {
                return Err(Error::SamplingExhausted {
                    attempts,
                    context: format!("injecting {needed} anomalies into snapshot {t}"),
                });
            }
            attempts += 1;
            let a = rng.gen_range(0..n as NodeId);
            let b = rng.gen_range(0..n as NodeId);
            let Some(e) = Edge::new(a, b) else { continue };
            if snap.contains(e.u, e.v) || injected.contains(&e) || !accept(t, e.u, e.v) {
                continue;
            }
            injected.insert(e);
            out.push(LabeledTestEdge {
                edge: e,
                snapshot: t,
                label: Label::Anomalous,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<Vec<RawEvent>> {
        parse_edge_list(Cursor::new(text), Path::new("mem"))
    }

    fn raw(triples: &[(u64, u64, u64)]) -> Vec<RawEvent> {
        triples
            .iter()
            .map(|&(src, dst, time)| RawEvent { src, dst, time })
            .collect()
    }

    #[test]
    fn six_events_chunk_into_three_snapshots() {
        let events = raw(&[
            (1, 2, 1),
            (2, 3, 2),
            (3, 4, 3),
            (4, 5, 4),
            (5, 6, 5),
            (6, 7, 6),
        ]);
        let gs = stream_from_raw(events, &IngestOptions::fixed_size(2)).unwrap();
        assert_eq!(gs.len(), 3);
        assert!(gs.snapshots().iter().all(|s| s.edge_count() == 2));
        assert_eq!(gs.node_count(), 7);
    }

    #[test]
    fn lone_self_loop_gives_empty_stream() {
        let gs = stream_from_raw(raw(&[(1, 1, 5)]), &IngestOptions::fixed_size(10)).unwrap();
        assert_eq!(gs.len(), 0);
        assert_eq!(gs.edge_count(), 0);
    }

    #[test]
    fn last_chunk_may_be_short() {
        let events: Vec<RawEvent> = (0..7)
            .map(|i| RawEvent {
                src: i,
                dst: i + 100,
                time: i,
            })
            .collect();
        let gs = stream_from_raw(events, &IngestOptions::fixed_size(3)).unwrap();
        let sizes: Vec<usize> = gs.snapshots().iter().map(Snapshot::edge_count).collect();
        assert_eq!(sizes, vec![3, 3, 1]);
    }

    #[test]
    fn repeats_removed_globally_keeping_first() {
        // (2,1) repeats (1,2) in reverse direction; it must vanish.
        let events = raw(&[(1, 2, 1), (3, 4, 2), (2, 1, 3), (5, 6, 4)]);
        let gs = stream_from_raw(events, &IngestOptions::fixed_size(2)).unwrap();
        assert_eq!(gs.edge_count(), 3);
        assert_eq!(gs.len(), 2);
    }

    #[test]
    fn events_sorted_by_time_before_chunking() {
        let events = raw(&[(5, 6, 30), (1, 2, 10), (3, 4, 20)]);
        let gs = stream_from_raw(events, &IngestOptions::fixed_size(1)).unwrap();
        let first = gs.snapshots()[0].edges()[0];
        assert_eq!((gs.original_id(first.u), gs.original_id(first.v)), (1, 2));
    }

    #[test]
    fn per_timestamp_mode_keeps_repeats_across_snapshots() {
        let events = raw(&[(1, 2, 0), (2, 3, 0), (1, 2, 1), (1, 2, 1)]);
        let gs = stream_from_raw(
            events,
            &IngestOptions {
                mode: SnapshotMode::PerTimestamp,
            },
        )
        .unwrap();
        assert_eq!(gs.len(), 2);
        assert_eq!(gs.snapshots()[1].edge_count(), 1);
    }

    #[test]
    fn zero_snapshot_size_is_config_error() {
        let err = stream_from_raw(raw(&[(1, 2, 0)]), &IngestOptions::fixed_size(0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn parser_accepts_commas_tabs_and_comments() {
        let events =
            parse("# header\n% konect\n1,2,3\n4\t5   6\n7 , 8 , 9\n10 11 1 12\n\n").unwrap();
        let got: Vec<_> = events.iter().map(|e| (e.src, e.dst, e.time)).collect();
        assert_eq!(got, vec![(1, 2, 3), (4, 5, 6), (7, 8, 9), (10, 11, 12)]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("1 2 3\n1 x 3\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("1 2\n").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn empty_file_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.txt");
        std::fs::write(&path, "# nothing\n").unwrap();
        assert!(matches!(
            ingest_edge_list(&path, &IngestOptions::fixed_size(10)),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn split_examples() {
        let gs = GraphStream::from_snapshot_pairs(3, vec![vec![(0, 1)]; 14]).unwrap();
        assert_eq!(split_train_test(&gs, 0.5).unwrap(), (0..7, 7..14));
        let gs = GraphStream::from_snapshot_pairs(3, vec![vec![(0, 1)]; 10]).unwrap();
        assert_eq!(split_train_test(&gs, 0.2).unwrap(), (0..2, 2..10));
        let gs = GraphStream::from_snapshot_pairs(3, vec![vec![(0, 1)]; 1]).unwrap();
        assert!(split_train_test(&gs, 0.5).is_err());
        let gs = GraphStream::from_snapshot_pairs(3, vec![vec![(0, 1)]; 3]).unwrap();
        assert!(split_train_test(&gs, 0.1).is_err());
    }

    #[test]
    fn degrees_sum_to_twice_edges() {
        let s = Snapshot::new(0, 5, [(0, 1), (1, 2), (2, 0), (3, 4), (1, 0)]).unwrap();
        let total: usize = (0..5).map(|v| s.degree(v)).sum();
        assert_eq!(total, 2 * s.edge_count());
        assert_eq!(s.edge_count(), 4);
        assert!(s.contains(1, 0) && s.contains(0, 1));
        assert_eq!(s.neighbors(1), &[0, 2]);
    }

    fn path_stream(n: usize, snapshots: usize) -> GraphStream {
        let pairs: Vec<(NodeId, NodeId)> = (0..n as NodeId - 1).map(|i| (i, i + 1)).collect();
        GraphStream::from_snapshot_pairs(n, vec![pairs; snapshots]).unwrap()
    }

    #[test]
    fn injection_counts_and_labels() {
        // 1000-edge snapshots on a large universe, 10% anomalies.
        let n = 2000;
        let pairs: Vec<(NodeId, NodeId)> = (0..1000).map(|i| (i, i + 1000)).collect();
        let gs = GraphStream::from_snapshot_pairs(n, vec![pairs; 2]).unwrap();
        let labeled = inject_anomalies(&gs, 1..2, 0.10, 3).unwrap();
        let anomalies = labeled
            .iter()
            .filter(|e| e.label == Label::Anomalous)
            .count();
        let normals = labeled.iter().filter(|e| e.label == Label::Normal).count();
        assert_eq!((anomalies, normals), (100, 1000));
        for e in labeled.iter().filter(|e| e.label == Label::Anomalous) {
            assert!(!gs.snapshots()[1].contains(e.edge.u, e.edge.v));
        }
    }

    #[test]
    fn injection_rounds_to_zero() {
        let gs = path_stream(10, 2);
        let labeled = inject_anomalies(&gs, 1..2, 0.01, 0).unwrap();
        assert!(labeled.iter().all(|e| e.label == Label::Normal));
    }

    #[test]
    fn injection_into_complete_graph_fails() {
        let mut k5 = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                k5.push((a, b));
            }
        }
        let gs = GraphStream::from_snapshot_pairs(5, vec![k5.clone(), k5]).unwrap();
        assert!(inject_anomalies(&gs, 1..2, 0.01, 0).is_err());
        assert!(inject_anomalies(&gs, 1..2, 0.5, 0).is_err());
    }

    #[test]
    fn injection_is_deterministic() {
        let gs = path_stream(50, 4);
        let a = inject_anomalies(&gs, 2..4, 0.2, 9).unwrap();
        let b = inject_anomalies(&gs, 2..4, 0.2, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn injection_respects_filter() {
        let gs = path_stream(40, 2);
        let labeled =
            inject_anomalies_where(&gs, 1..2, 0.5, 1, |_, u, v| (u < 20) != (v < 20)).unwrap();
        for e in labeled.iter().filter(|e| e.label == Label::Anomalous) {
            assert!((e.edge.u < 20) != (e.edge.v < 20));
        }
    }
}
