//! Data files and configuration.
//!
//! * nodes CSV: `id,school,sex,grade,race,hh_smokes,mom_edu,price,smokes`,
//!   booleans as `0`/`1`;
//! * edges CSV: `src,dst`, one directed link per row;
//! * key-value files: one `key = value` per line, `#` starts a comment.
//!   Theta files map statistic names to coefficients (plus an optional
//!   `beta`), prior files map names to `mean, sd`, scenario files describe
//!   a policy experiment (see [`parse_scenario`]).
//!
//! Every network is one school; nodes are ordered by id within a school and
//! schools by id.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::counterfactual::{Mode, Scenario, ScenarioKind, Treated};
use crate::dynamics::KDistribution;
use crate::error::{Error, Result};
use crate::estimation::{ObservedNetwork, ObservedSample, Prior};
use crate::model::{CovariateTable, ModelParams, NetworkState, NodeCovariates, Statistic, StatisticSet};

pub const NODE_HEADER: [&str; 9] = ["id", "school", "sex", "grade", "race", "hh_smokes", "mom_edu", "price", "smokes"];
pub const EDGE_HEADER: [&str; 2] = ["src", "dst"];

/// Observed networks with the external node ids of each position.
#[derive(Clone, Debug, PartialEq)]
pub struct DataBundle {
    pub sample: ObservedSample,
    /// `ids[g][i]`: id of node `i` of network `g`.
    pub ids: Vec<Vec<u64>>,
    pub schools: Vec<u32>,
}

impl DataBundle {
    /// Position of `id` in the concatenation of all networks.
    pub fn global_index(&self, id: u64) -> Option<usize> {
        let mut offset = 0;
        for ids in &self.ids {
            if let Ok(i) = ids.binary_search(&id) {
                return Some(offset + i);
            }
            offset += ids.len();
        }
        None
    }

    pub fn total_nodes(&self) -> usize {
        self.ids.iter().map(Vec::len).sum()
    }
}

fn parse_err(path: &Path, row: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        msg: msg.into(),
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "0" | "false" => Some(false),
        "1" | "true" => Some(true),
        _ => None,
    }
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(parse_err(path, 1, format!("expected header {:?}, found {got:?}", header.join(","))));
    }
    Ok(rdr)
}

struct NodeRow {
    id: u64,
    cov: NodeCovariates,
    smokes: bool,
}

fn parse_node(path: &Path, row: usize, rec: &csv::StringRecord) -> Result<NodeRow> {
    let field = |k: usize| rec.get(k).unwrap_or("");
    let bad = |k: usize| parse_err(path, row, format!("bad {} value {:?}", NODE_HEADER[k], field(k)));
    let id = field(0).parse().map_err(|_| bad(0))?;
    let cov = NodeCovariates {
        school_id: field(1).parse().map_err(|_| bad(1))?,
        sex: field(2).parse().map_err(|_| bad(2))?,
        grade: field(3).parse().map_err(|_| bad(3))?,
        race: field(4).parse().map_err(|_| bad(4))?,
        hh_smokes: parse_bool(field(5)).ok_or_else(|| bad(5))?,
        mom_edu: parse_bool(field(6)).ok_or_else(|| bad(6))?,
        price: field(7).parse().map_err(|_| bad(7))?,
    };
    cov.validate().map_err(|e| parse_err(path, row, e.to_string()))?;
    let smokes = parse_bool(field(8)).ok_or_else(|| bad(8))?;
    Ok(NodeRow { id, cov, smokes })
}

/// Reads the node and edge files into one network per school.
pub fn load_data(nodes_path: &Path, edges_path: &Path) -> Result<DataBundle> {
    let mut by_school: BTreeMap<u32, Vec<NodeRow>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for (k, rec) in reader(nodes_path, &NODE_HEADER)?.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        if rec.len() != NODE_HEADER.len() {
            return Err(parse_err(nodes_path, row, format!("expected 9 fields, found {}", rec.len())));
        }
        let node = parse_node(nodes_path, row, &rec)?;
        if !seen.insert(node.id) {
            return Err(parse_err(nodes_path, row, format!("duplicate node id {}", node.id)));
        }
        by_school.entry(node.cov.school_id).or_default().push(node);
    }
    if by_school.is_empty() {
        return Err(parse_err(nodes_path, 1, "no nodes"));
    }
    let mut position: HashMap<u64, (usize, usize)> = HashMap::new();
    let mut schools = Vec::new();
    let mut ids = Vec::new();
    let mut states = Vec::new();
    let mut tables = Vec::new();
    for (g, (school, mut rows)) in by_school.into_iter().enumerate() {
        rows.sort_by_key(|r| r.id);
        if rows.len() < 2 {
            return Err(Error::config(format!("school {school} has fewer than two students")));
        }
        let mut s = NetworkState::empty(rows.len())?;
        for (i, r) in rows.iter().enumerate() {
            position.insert(r.id, (g, i));
            s.set_action(i, r.smokes);
        }
        schools.push(school);
        ids.push(rows.iter().map(|r| r.id).collect::<Vec<_>>());
        tables.push(CovariateTable::new(rows.into_iter().map(|r| r.cov).collect())?);
        states.push(s);
    }
    let mut edges = HashSet::new();
    for (k, rec) in reader(edges_path, &EDGE_HEADER)?.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let parse = |c: usize| -> Result<u64> {
            let v = rec.get(c).unwrap_or("");
            v.parse().map_err(|_| parse_err(edges_path, row, format!("bad {} value {v:?}", EDGE_HEADER[c])))
        };
        let (src, dst) = (parse(0)?, parse(1)?);
        let lookup = |id: u64| {
            position
                .get(&id)
                .copied()
                .ok_or_else(|| parse_err(edges_path, row, format!("unknown node id {id}")))
        };
        let ((gs, i), (gd, j)) = (lookup(src)?, lookup(dst)?);
        if src == dst {
            return Err(parse_err(edges_path, row, format!("self-loop on node {src}")));
        }
        if gs != gd {
            return Err(parse_err(edges_path, row, format!("edge {src} -> {dst} crosses schools")));
        }
        if !edges.insert((src, dst)) {
            return Err(parse_err(edges_path, row, format!("duplicate edge {src} -> {dst}")));
        }
        states[gs].set_link(i, j, true);
    }
    let networks = states
        .into_iter()
        .zip(tables)
        .map(|(s, x)| ObservedNetwork::new(s, x))
        .collect::<Result<_>>()?;
    Ok(DataBundle {
        sample: ObservedSample { networks },
        ids,
        schools,
    })
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes nodes and edges; ids are assigned consecutively when `ids` is
/// `None`. Reading the files back gives the same sample.
pub fn write_data(sample: &ObservedSample, ids: Option<&[Vec<u64>]>, nodes_path: &Path, edges_path: &Path) -> Result<()> {
    let mut nodes = csv::Writer::from_writer(create(nodes_path)?);
    let mut edges = csv::Writer::from_writer(create(edges_path)?);
    nodes.write_record(NODE_HEADER)?;
    edges.write_record(EDGE_HEADER)?;
    let mut next = 0u64;
    for (g, o) in sample.networks.iter().enumerate() {
        let n = o.state.n();
        let own: Vec<u64> = match ids {
            Some(v) => v[g].clone(),
            None => (0..n as u64).map(|i| next + i).collect(),
        };
        next += n as u64;
        for (i, c) in o.covariates.nodes().iter().enumerate() {
            nodes.write_record([
                own[i].to_string(),
                c.school_id.to_string(),
                c.sex.to_string(),
                c.grade.to_string(),
                c.race.to_string(),
                (c.hh_smokes as u8).to_string(),
                (c.mom_edu as u8).to_string(),
                c.price.to_string(),
                (o.state.action(i) as u8).to_string(),
            ])?;
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && o.state.link(i, j) {
                    edges.write_record([own[i].to_string(), own[j].to_string()])?;
                }
            }
        }
    }
    nodes.flush().map_err(|e| Error::io(nodes_path, e))?;
    edges.flush().map_err(|e| Error::io(edges_path, e))?;
    Ok(())
}

/// One `key = value` line with its 1-based line number.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyValue {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_key_values(text: &str, path: &Path) -> Result<Vec<KeyValue>> {
    let mut out: Vec<KeyValue> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, k + 1, "expected key = value"))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(parse_err(path, k + 1, "empty key"));
        }
        if out.iter().any(|kv| kv.key == key) {
            return Err(parse_err(path, k + 1, format!("key {key:?} repeated")));
        }
        out.push(KeyValue {
            key,
            value: value.trim().to_string(),
            line: k + 1,
        });
    }
    Ok(out)
}

pub fn read_key_values(path: &Path) -> Result<Vec<KeyValue>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text, path)
}

fn parse_f64(path: &Path, kv: &KeyValue, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(path, kv.line, format!("{}: expected a number, found {s:?}", kv.key)))
}

/// Statistic names to coefficients, in file order; `beta` sets the scale.
pub fn parse_theta(text: &str, path: &Path) -> Result<ModelParams> {
    let mut stats = Vec::new();
    let mut theta = Vec::new();
    let mut beta = 1.0;
    for kv in parse_key_values(text, path)? {
        if kv.key == "beta" {
            beta = parse_f64(path, &kv, &kv.value)?;
            continue;
        }
        let st: Statistic = kv.key.parse().map_err(|e: Error| parse_err(path, kv.line, e.to_string()))?;
        stats.push(st);
        theta.push(parse_f64(path, &kv, &kv.value)?);
    }
    ModelParams::with_beta(StatisticSet::new(stats)?, theta, beta)
}

pub fn read_theta(path: &Path) -> Result<ModelParams> {
    parse_theta(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?, path)
}

/// Statistic names to `mean, sd`.
pub fn parse_prior(text: &str, path: &Path) -> Result<(StatisticSet, Prior)> {
    let mut stats = Vec::new();
    let (mut mean, mut sd) = (Vec::new(), Vec::new());
    for kv in parse_key_values(text, path)? {
        let st: Statistic = kv.key.parse().map_err(|e: Error| parse_err(path, kv.line, e.to_string()))?;
        let (m, s) = kv
            .value
            .split_once(',')
            .ok_or_else(|| parse_err(path, kv.line, "expected mean, sd"))?;
        stats.push(st);
        mean.push(parse_f64(path, &kv, m)?);
        sd.push(parse_f64(path, &kv, s)?);
    }
    Ok((StatisticSet::new(stats)?, Prior::new(mean, sd).map_err(|e| parse_err(path, 0, e.to_string()))?))
}

pub fn read_prior(path: &Path) -> Result<(StatisticSet, Prior)> {
    parse_prior(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?, path)
}

const SCENARIO_KEYS: [&str; 14] = [
    "kind",
    "cents",
    "group_a",
    "group_b",
    "fraction",
    "treated",
    "treated_fraction",
    "forced_action",
    "mode",
    "replications",
    "burn",
    "thin",
    "samples",
    "k",
];

/// Scenario file. Keys:
///
/// * `kind`: `price_delta` (with `cents`), `swap` (with `group_a`,
///   `group_b` as node-id lists and `fraction`) or `clamp` (with `treated`
///   as an id list or `treated_fraction`, and `forced_action` 0/1);
/// * `mode`: `full` (default), `fixed_network` or `pe_off`;
/// * `replications` (default 10), `burn`, `thin`, `samples`;
/// * `k`: meeting sizes, drawn uniformly from the listed values.
///
/// Node ids are resolved against `data`.
pub fn parse_scenario(text: &str, path: &Path, data: &DataBundle, seed: u64) -> Result<Scenario> {
    let kvs = parse_key_values(text, path)?;
    if let Some(kv) = kvs.iter().find(|kv| !SCENARIO_KEYS.contains(&kv.key.as_str())) {
        return Err(parse_err(path, kv.line, format!("unknown key {:?}", kv.key)));
    }
    let get = |k: &str| kvs.iter().find(|kv| kv.key == k);
    let need = |k: &str| get(k).ok_or_else(|| Error::config(format!("{}: missing key {k:?}", path.display())));
    let number = |k: &str| -> Result<f64> {
        let kv = need(k)?;
        parse_f64(path, kv, &kv.value)
    };
    let count = |k: &str| -> Result<Option<u64>> {
        get(k)
            .map(|kv| {
                kv.value
                    .parse::<u64>()
                    .map_err(|_| parse_err(path, kv.line, format!("{k}: expected a non-negative integer")))
            })
            .transpose()
    };
    let ids = |k: &str| -> Result<Vec<usize>> {
        let kv = need(k)?;
        kv.value
            .split(',')
            .map(|t| {
                let id: u64 = t
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, kv.line, format!("{k}: bad node id {t:?}")))?;
                data.global_index(id)
                    .ok_or_else(|| parse_err(path, kv.line, format!("{k}: unknown node id {id}")))
            })
            .collect()
    };
    let kind = match need("kind")?.value.as_str() {
        "price_delta" => ScenarioKind::PriceDelta { cents: number("cents")? },
        "swap" => ScenarioKind::Swap {
            group_a: ids("group_a")?,
            group_b: ids("group_b")?,
            fraction: number("fraction")?,
        },
        "clamp" => {
            let treated = match (get("treated"), get("treated_fraction")) {
                (Some(_), None) => Treated::Nodes(ids("treated")?),
                (None, Some(_)) => Treated::Fraction(number("treated_fraction")?),
                _ => return Err(Error::config("clamp needs exactly one of treated, treated_fraction")),
            };
            let kv = need("forced_action")?;
            let forced_action =
                parse_bool(&kv.value).ok_or_else(|| parse_err(path, kv.line, "forced_action must be 0 or 1"))?;
            ScenarioKind::Clamp { treated, forced_action }
        }
        other => return Err(parse_err(path, need("kind")?.line, format!("unknown kind {other:?}"))),
    };
    let mode = match get("mode") {
        Some(kv) => kv.value.parse::<Mode>().map_err(|e| parse_err(path, kv.line, e.to_string()))?,
        None => Mode::Full,
    };
    let mut sc = Scenario::new(kind, mode, count("replications")?.unwrap_or(10) as usize, seed);
    sc.burn = count("burn")?;
    sc.thin = count("thin")?;
    if let Some(m) = count("samples")? {
        sc.samples = m as usize;
    }
    if let Some(kv) = get("k") {
        let ks = kv
            .value
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| parse_err(path, kv.line, "k: expected a list of meeting sizes"))?;
        let w = 1.0 / ks.len() as f64;
        sc.k_dist = Some(KDistribution::new(ks.into_iter().map(|k| (k, w)).collect())?);
    }
    Ok(sc)
}

pub fn read_scenario(path: &Path, data: &DataBundle, seed: u64) -> Result<Scenario> {
    parse_scenario(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?, path, data, seed)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Header row followed by numeric rows.
pub fn write_table(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    const NODES: &str = "id,school,sex,grade,race,hh_smokes,mom_edu,price,smokes\n\
                         2,1,M,9,white,0,1,120,1\n\
                         1,1,F,10,black,1,0,120.5,0\n";

    #[test]
    fn two_nodes_one_edge() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", NODES);
        let e = write(dir.path(), "e.csv", "src,dst\n1,2\n");
        let d = load_data(&n, &e).unwrap();
        assert_eq!(d.ids, vec![vec![1, 2]]);
        let s = &d.sample.networks[0].state;
        assert!(s.link(0, 1) && !s.link(1, 0));
        assert_eq!(s.link_count(), 1);
        assert!(s.action(1) && !s.action(0));
        assert_eq!(d.global_index(2), Some(1));
    }

    #[test]
    fn edge_errors() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", NODES);
        for (body, needle) in [
            ("src,dst\n1,7\n", "unknown node id 7"),
            ("src,dst\n1,1\n", "self-loop"),
            ("src,dst\n1,2\n1,2\n", "duplicate edge"),
        ] {
            let e = write(dir.path(), "e.csv", body);
            let msg = load_data(&n, &e).unwrap_err().to_string();
            assert!(msg.contains(needle), "{msg}");
        }
    }

    #[test]
    fn malformed_row_reports_number() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", "id,school,sex,grade,race,hh_smokes,mom_edu,price,smokes\n1,1,F,9,white,0,0,100,0\n2,1,F,15,white,0,0,100,0\n");
        let e = write(dir.path(), "e.csv", "src,dst\n");
        let msg = load_data(&n, &e).unwrap_err().to_string();
        assert!(msg.contains("row 3"), "{msg}");
    }

    #[test]
    fn two_schools_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(
            dir.path(),
            "n.csv",
            "id,school,sex,grade,race,hh_smokes,mom_edu,price,smokes\n\
             10,2,F,9,white,0,0,100,0\n11,2,M,12,asian,0,0,99.25,1\n3,1,F,7,other,1,1,80,0\n4,1,F,8,hispanic,0,0,80,1\n",
        );
        let e = write(dir.path(), "e.csv", "src,dst\n10,11\n11,10\n4,3\n");
        let d = load_data(&n, &e).unwrap();
        assert_eq!(d.schools, vec![1, 2]);
        assert_eq!(d.sample.networks.len(), 2);
        assert!(load_data(&n, &write(dir.path(), "x.csv", "src,dst\n3,10\n")).is_err());
        let (n2, e2) = (dir.path().join("n2.csv"), dir.path().join("e2.csv"));
        write_data(&d.sample, Some(&d.ids), &n2, &e2).unwrap();
        assert_eq!(load_data(&n2, &e2).unwrap(), d);
    }

    #[test]
    fn key_value_files() {
        let p = Path::new("t.txt");
        let m = parse_theta("# model\nreciprocity = 1.5\nlink:const=-2 # cost\nbeta = 0.5\n", p).unwrap();
        assert_eq!(m.theta, vec![1.5, -2.0]);
        assert_eq!(m.beta, 0.5);
        assert!(parse_theta("nope = 1\n", p).is_err());
        assert!(parse_theta("reciprocity = 1\nreciprocity = 2\n", p).is_err());
        let (s, prior) = parse_prior("reciprocity = 0, 2.5\n", p).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!((prior.mean[0], prior.sd[0]), (0.0, 2.5));
        assert!(parse_prior("reciprocity = 0\n", p).is_err());
    }

    #[test]
    fn scenario_files() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", NODES);
        let e = write(dir.path(), "e.csv", "src,dst\n");
        let d = load_data(&n, &e).unwrap();
        let p = Path::new("s.txt");
        let sc = parse_scenario("kind = clamp\ntreated = 2\nforced_action = 1\nmode = pe_off\nk = 2, 3\n", p, &d, 9).unwrap();
        assert_eq!(sc.kind, ScenarioKind::Clamp { treated: Treated::Nodes(vec![1]), forced_action: true });
        assert_eq!((sc.mode, sc.replications, sc.seed), (Mode::PeOff, 10, 9));
        assert_eq!(sc.k_dist.unwrap().support(), &[2, 3]);
        let sc = parse_scenario("kind = price_delta\ncents = -25\nreplications = 3\nthin = 4\n", p, &d, 1).unwrap();
        assert_eq!(sc.kind, ScenarioKind::PriceDelta { cents: -25.0 });
        assert_eq!((sc.replications, sc.thin), (3, Some(4)));
        for bad in ["kind = swap\ngroup_a = 1\ngroup_b = 5\nfraction = 1\n", "kind = clamp\ntreated = 1\n", "kind = price_delta\ncents = 1\ncolour = red\n"] {
            assert!(parse_scenario(bad, p, &d, 1).is_err(), "{bad}");
        }
    }
}
