//! Sparse bipartite user–item rating network.
//!
//! A [`RatingGraph`] is immutable once built. Links keep their insertion
//! order; per-user and per-item adjacency is stored in CSR form so the
//! ranking loops can walk `O_i` and `U_α` without hashing.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use thiserror::Error;

/// Lowest rating on the 5-star scale.
pub const MIN_RATING: f64 = 1.0;
/// Highest rating on the 5-star scale.
pub const MAX_RATING: f64 = 5.0;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: rating out of bounds: {rating}")]
    RatingOutOfBounds { line: usize, rating: f64 },
    #[error("line {line}: duplicate (user, item) pair ({user}, {item})")]
    DuplicatePair {
        line: usize,
        user: String,
        item: String,
    },
    #[error("link {index}: user {user} / item {item} outside {num_users}x{num_items}")]
    IndexOutOfRange {
        index: usize,
        user: usize,
        item: usize,
        num_users: usize,
        num_items: usize,
    },
    #[error("empty benchmark set ({skipped} ids not found)")]
    EmptyBenchmark { skipped: usize },
    #[error("benchmark item index {0} out of range")]
    BenchmarkIndex(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One rating: `user` rated `item` with `rating`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
}

impl Link {
    pub fn new(user: usize, item: usize, rating: f64) -> Self {
        Self { user, item, rating }
    }
}

/// Compressed adjacency: `targets[offsets[v]..offsets[v + 1]]` are the
/// neighbours of node `v`, `ratings` is parallel to `targets`.
#[derive(Debug, Clone, PartialEq)]
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    ratings: Vec<f64>,
}

impl Adjacency {
    fn build(num_nodes: usize, links: &[Link], key: impl Fn(&Link) -> (usize, usize)) -> Self {
        let mut offsets = vec![0usize; num_nodes + 1];
        for link in links {
            offsets[key(link).0 + 1] += 1;
        }
        for v in 0..num_nodes {
            offsets[v + 1] += offsets[v];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0usize; links.len()];
        let mut ratings = vec![0.0; links.len()];
        for link in links {
            let (src, dst) = key(link);
            let slot = cursor[src];
            targets[slot] = dst;
            ratings[slot] = link.rating;
            cursor[src] += 1;
        }
        Self {
            offsets,
            targets,
            ratings,
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    fn neighbours(&self, v: usize) -> (&[usize], &[f64]) {
        let range = self.offsets[v]..self.offsets[v + 1];
        (&self.targets[range.clone()], &self.ratings[range])
    }
}

/// Immutable bipartite rating network.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingGraph {
    num_users: usize,
    num_items: usize,
    links: Vec<Link>,
    by_user: Adjacency,
    by_item: Adjacency,
}

impl RatingGraph {
    /// Builds a graph, checking index ranges, rating bounds and duplicate pairs.
    pub fn new(num_users: usize, num_items: usize, links: Vec<Link>) -> Result<Self, GraphError> {
        let mut seen = HashSet::with_capacity(links.len());
        for (index, link) in links.iter().enumerate() {
            if link.user >= num_users || link.item >= num_items {
                return Err(GraphError::IndexOutOfRange {
                    index,
                    user: link.user,
                    item: link.item,
                    num_users,
                    num_items,
                });
            }
            if !valid_rating(link.rating) {
                return Err(GraphError::RatingOutOfBounds {
                    line: index + 1,
                    rating: link.rating,
                });
            }
            if !seen.insert((link.user, link.item)) {
                return Err(GraphError::DuplicatePair {
                    line: index + 1,
                    user: link.user.to_string(),
                    item: link.item.to_string(),
                });
            }
        }
        Ok(Self::from_checked(num_users, num_items, links))
    }

    fn from_checked(num_users: usize, num_items: usize, links: Vec<Link>) -> Self {
        let by_user = Adjacency::build(num_users, &links, |l| (l.user, l.item));
        let by_item = Adjacency::build(num_items, &links, |l| (l.item, l.user));
        Self {
            num_users,
            num_items,
            links,
            by_user,
            by_item,
        }
    }

    /// Same topology with every rating passed through `f`, in link order.
    ///
    /// `f` must keep ratings inside `[1, 5]`; this is checked.
    pub fn map_ratings(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let links: Vec<Link> = self
            .links
            .iter()
            .enumerate()
            .map(|(idx, l)| {
                let rating = f(idx, l.rating);
                assert!(valid_rating(rating), "mapped rating {rating} outside [1,5]");
                Link { rating, ..*l }
            })
            .collect();
        Self::from_checked(self.num_users, self.num_items, links)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// `k_i`
    pub fn user_degree(&self, user: usize) -> usize {
        self.by_user.degree(user)
    }

    /// `k_α`
    pub fn item_degree(&self, item: usize) -> usize {
        self.by_item.degree(item)
    }

    /// Items rated by `user` and the ratings given, in link order.
    pub fn user_ratings(&self, user: usize) -> (&[usize], &[f64]) {
        self.by_user.neighbours(user)
    }

    /// Users who rated `item` and the ratings they gave, in link order.
    pub fn item_ratings(&self, item: usize) -> (&[usize], &[f64]) {
        self.by_item.neighbours(item)
    }

    pub fn stats(&self) -> GraphStats {
        graph_stats(self)
    }

    /// Relabels users and items: user `u` becomes `user_perm[u]`, item `a`
    /// becomes `item_perm[a]`. Link order is preserved.
    pub fn relabel(&self, user_perm: &[usize], item_perm: &[usize]) -> Self {
        assert_eq!(user_perm.len(), self.num_users);
        assert_eq!(item_perm.len(), self.num_items);
        let links = self
            .links
            .iter()
            .map(|l| Link::new(user_perm[l.user], item_perm[l.item], l.rating))
            .collect();
        Self::from_checked(self.num_users, self.num_items, links)
    }
}

fn valid_rating(r: f64) -> bool {
    (MIN_RATING..=MAX_RATING).contains(&r)
}

/// Bijection between external string ids and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Dense ids `"0"`, `"1"`, … for `n` nodes.
    pub fn sequential(n: usize) -> Self {
        let mut map = Self::new();
        for i in 0..n {
            map.intern(&i.to_string());
        }
        map
    }

    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&idx) = self.index.get(id) {
            return idx;
        }
        let idx = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), idx);
        idx
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// A graph together with the external ids of its users and items.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: RatingGraph,
    pub users: IdMap,
    pub items: IdMap,
}

impl Dataset {
    /// Wraps a graph whose external ids are its dense indices.
    pub fn with_sequential_ids(graph: RatingGraph) -> Self {
        let users = IdMap::sequential(graph.num_users());
        let items = IdMap::sequential(graph.num_items());
        Self {
            graph,
            users,
            items,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// `user_id,item_id,rating`, optional header, `#` comments.
    Csv,
    /// `UserID::MovieID::Rating::Timestamp`.
    MovieLens,
}

impl std::fmt::Display for InputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InputFormat::Csv => "csv",
            InputFormat::MovieLens => "movielens",
        })
    }
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" | "generic-csv" => Ok(Self::Csv),
            "movielens" | "movielens-double-colon" => Ok(Self::MovieLens),
            other => Err(format!("unknown input format `{other}`")),
        }
    }
}

/// Reads ratings from `source` and maps external ids to dense indices in
/// order of first appearance.
pub fn ingest_ratings(source: impl BufRead, format: InputFormat) -> Result<Dataset, GraphError> {
    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let mut links = Vec::new();
    let mut seen = HashSet::new();
    let mut first_record = true;

    let mut push = |line: usize, user: &str, item: &str, rating: &str| -> Result<(), GraphError> {
        let rating: f64 = rating.trim().parse().map_err(|_| GraphError::Malformed {
            line,
            reason: format!("rating `{}` is not a number", rating.trim()),
        })?;
        if !valid_rating(rating) {
            return Err(GraphError::RatingOutOfBounds { line, rating });
        }
        let (user, item) = (user.trim(), item.trim());
        if user.is_empty() || item.is_empty() {
            return Err(GraphError::Malformed {
                line,
                reason: "empty id".into(),
            });
        }
        let u = users.intern(user);
        let a = items.intern(item);
        if !seen.insert((u, a)) {
            return Err(GraphError::DuplicatePair {
                line,
                user: user.to_owned(),
                item: item.to_owned(),
            });
        }
        links.push(Link::new(u, a, rating));
        Ok(())
    };

    match format {
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .comment(Some(b'#'))
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(source);
            for record in reader.records() {
                let record = record.map_err(|e| GraphError::Malformed {
                    line: e.position().map_or(0, |p| p.line() as usize),
                    reason: e.to_string(),
                })?;
                let line = record.position().map_or(0, |p| p.line() as usize);
                if record.len() != 3 {
                    return Err(GraphError::Malformed {
                        line,
                        reason: format!("expected 3 fields, found {}", record.len()),
                    });
                }
                let is_header = first_record && record[2].parse::<f64>().is_err();
                first_record = false;
                if is_header {
                    continue;
                }
                push(line, &record[0], &record[1], &record[2])?;
            }
        }
        InputFormat::MovieLens => {
            for (n, line) in source.lines().enumerate() {
                let line = line?;
                let lineno = n + 1;
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                let fields: Vec<&str> = line.split("::").collect();
                if fields.len() < 3 || fields.len() > 4 {
                    return Err(GraphError::Malformed {
                        line: lineno,
                        reason: format!("expected 4 `::`-separated fields, found {}", fields.len()),
                    });
                }
                push(lineno, fields[0], fields[1], fields[2])?;
            }
        }
    }

    let graph = RatingGraph::from_checked(users.len(), items.len(), links);
    Ok(Dataset {
        graph,
        users,
        items,
    })
}

/// Writes `dataset` in the generic CSV format, preceded by `header` lines as
/// `#` comments. Ratings use the shortest representation that parses back to
/// the same `f64`.
pub fn write_ratings_csv(
    dataset: &Dataset,
    header: &[String],
    mut out: impl Write,
) -> std::io::Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "user_id,item_id,rating")?;
    let mut buf = String::new();
    for link in dataset.graph.links() {
        buf.clear();
        let _ = writeln!(
            buf,
            "{},{},{}",
            csv_field(dataset.users.id(link.user)),
            csv_field(dataset.items.id(link.item)),
            link.rating
        );
        out.write_all(buf.as_bytes())?;
    }
    Ok(())
}

fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n', '#']) || s.starts_with(' ') || s.ends_with(' ') {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

/// Benchmark items `E`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkSet {
    items: Vec<usize>,
}

impl BenchmarkSet {
    /// Sorted, de-duplicated item indices; all must be `< num_items`.
    pub fn new(mut items: Vec<usize>, num_items: usize) -> Result<Self, GraphError> {
        items.sort_unstable();
        items.dedup();
        if items.is_empty() {
            return Err(GraphError::EmptyBenchmark { skipped: 0 });
        }
        if let Some(&bad) = items.iter().find(|&&i| i >= num_items) {
            return Err(GraphError::BenchmarkIndex(bad));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.binary_search(&item).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedBenchmark {
    pub set: BenchmarkSet,
    /// Ids that were not found in the item id map.
    pub skipped: usize,
}

/// Reads one external item id per line; blank and `#` lines are skipped.
pub fn load_benchmark(source: impl BufRead, items: &IdMap) -> Result<LoadedBenchmark, GraphError> {
    let mut found = Vec::new();
    let mut skipped = 0;
    for line in source.lines() {
        let line = line?;
        let id = line.trim();
        if id.is_empty() || id.starts_with('#') {
            continue;
        }
        match items.get(id) {
            Some(idx) => found.push(idx),
            None => skipped += 1,
        }
    }
    if found.is_empty() {
        return Err(GraphError::EmptyBenchmark { skipped });
    }
    let set = BenchmarkSet::new(found, items.len())?;
    Ok(LoadedBenchmark { set, skipped })
}

/// Summary numbers for a rating network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    pub num_users: usize,
    pub num_items: usize,
    pub num_links: usize,
    /// ⟨k_u⟩
    pub mean_user_degree: f64,
    /// ⟨k_o⟩
    pub mean_item_degree: f64,
    pub sparsity: f64,
}

pub fn graph_stats(g: &RatingGraph) -> GraphStats {
    let links = g.num_links() as f64;
    let users = g.num_users() as f64;
    let items = g.num_items() as f64;
    GraphStats {
        num_users: g.num_users(),
        num_items: g.num_items(),
        num_links: g.num_links(),
        mean_user_degree: if users > 0.0 { links / users } else { 0.0 },
        mean_item_degree: if items > 0.0 { links / items } else { 0.0 },
        sparsity: if users * items > 0.0 {
            links / (users * items)
        } else {
            0.0
        },
    }
}
