use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::{GradedPair, LabeledPair, LabeledPairSet};
use crate::hierarchy::{Closure, NodeId};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-comment, non-blank lines with their 1-based line numbers, split on tabs.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').map(str::trim).collect()))
        }
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn fields<'a>(path: &Path, line: usize, f: &[&'a str], n: usize) -> Result<Vec<&'a str>> {
    if f.len() != n {
        return Err(parse_err(
            path,
            line,
            format!("expected {n} tab-separated fields, found {}", f.len()),
        ));
    }
    if let Some(i) = f.iter().position(|s| s.is_empty()) {
        return Err(parse_err(path, line, format!("field {} is empty", i + 1)));
    }
    Ok(f.to_vec())
}

/// Parses `child<TAB>parent` lines.
pub fn parse_edges(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (line, f) in records(text) {
        let f = fields(path, line, &f, 2)?;
        out.push((f[0].to_owned(), f[1].to_owned()));
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{} contains no edges", path.display())));
    }
    Ok(out)
}

/// Reads a `child<TAB>parent` edge list in file order.
pub fn load_edges(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    parse_edges(&read(path)?, path)
}

/// Reads `u<TAB>v<TAB>{0|1}` lines; every name must resolve through `lookup`.
pub fn load_labeled_pairs<F>(path: impl AsRef<Path>, lookup: F) -> Result<LabeledPairSet>
where
    F: Fn(&str) -> Option<NodeId>,
{
    let path = path.as_ref();
    let text = read(path)?;
    let mut out = Vec::new();
    for (line, f) in records(&text) {
        let f = fields(path, line, &f, 3)?;
        let label = match f[2] {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(path, line, format!("label '{other}' is not 0 or 1"))),
        };
        let resolve = |name: &str| {
            lookup(name).ok_or_else(|| parse_err(path, line, format!("unknown node '{name}'")))
        };
        out.push(LabeledPair {
            u: resolve(f[0])?,
            v: resolve(f[1])?,
            label,
        });
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{} contains no pairs", path.display())));
    }
    Ok(LabeledPairSet::new(out))
}

/// Reads `word1<TAB>word2<TAB>score` lines.
pub fn load_graded(path: impl AsRef<Path>) -> Result<Vec<(String, String, f64)>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut out = Vec::new();
    for (line, f) in records(&text) {
        let f = fields(path, line, &f, 3)?;
        let score: f64 = f[2]
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| parse_err(path, line, format!("score '{}' is not a finite number", f[2])))?;
        out.push((f[0].to_owned(), f[1].to_owned(), score));
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{} contains no graded pairs", path.display())));
    }
    Ok(out)
}

/// Reads `word<TAB>syn1,syn2,...` lines. Repeated words extend their list.
pub fn load_synset_map(path: impl AsRef<Path>) -> Result<HashMap<String, Vec<String>>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut out: HashMap<String, Vec<String>> = HashMap::new();
    for (line, f) in records(&text) {
        let f = fields(path, line, &f, 2)?;
        let list = out.entry(f[0].to_owned()).or_default();
        for s in f[1].split(',').map(str::trim) {
            if s.is_empty() {
                return Err(parse_err(path, line, "empty synset name"));
            }
            list.push(s.to_owned());
        }
    }
    Ok(out)
}

/// Joins graded word pairs with their synsets.
///
/// Words missing from `map`, and synsets `lookup` cannot resolve, are
/// dropped, which can leave a side empty.
pub fn graded_pairs<F>(
    graded: &[(String, String, f64)],
    map: &HashMap<String, Vec<String>>,
    lookup: F,
) -> Vec<GradedPair>
where
    F: Fn(&str) -> Option<NodeId>,
{
    let resolve = |word: &str| -> Vec<NodeId> {
        map.get(word)
            .map(|syns| syns.iter().filter_map(|s| lookup(s)).collect())
            .unwrap_or_default()
    };
    graded
        .iter()
        .map(|(u, v, gold)| GradedPair {
            word_u: u.clone(),
            word_v: v.clone(),
            gold: *gold,
            synsets_u: resolve(u),
            synsets_v: resolve(v),
        })
        .collect()
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    Ok(std::io::BufWriter::new(
        fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Writes closure pairs as `child<TAB>ancestor` lines.
pub fn write_pairs(path: impl AsRef<Path>, closure: &Closure) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        for &(u, v) in closure.pairs() {
            writeln!(w, "{}\t{}", closure.name(u), closure.name(v))?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// Writes `u<TAB>v<TAB>label` lines; `names` is indexed by node id.
pub fn write_labeled_pairs(path: impl AsRef<Path>, set: &LabeledPairSet, names: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        for p in &set.pairs {
            writeln!(
                w,
                "{}\t{}\t{}",
                names[p.u.index()],
                names[p.v.index()],
                u8::from(p.label)
            )?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::HierarchyGraph;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("mem.tsv")
    }

    #[test]
    fn edges_examples() {
        let e = parse_edges("c\ta\na\tr\n", &p()).unwrap();
        assert_eq!(e, vec![("c".into(), "a".into()), ("a".into(), "r".into())]);
        let e = parse_edges("# header\n\nc\ta\n", &p()).unwrap();
        assert_eq!(e.len(), 1);
        match parse_edges("c\ta\nx\ty\tz\n", &p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_edges("# nothing\n", &p()), Err(Error::Data(_))));
    }

    #[test]
    fn labeled_and_graded_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = HierarchyGraph::from_edges(&[("c", "a"), ("a", "r")])
            .unwrap()
            .transitive_closure()
            .unwrap();
        let lp = dir.path().join("pairs.tsv");
        fs::write(&lp, "c\ta\t1\na\tc\t0\nc\ta\t1\n").unwrap();
        let set = load_labeled_pairs(&lp, |n| c.id(n)).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.positives(), 2);
        fs::write(&lp, "c\ta\t2\n").unwrap();
        assert!(matches!(load_labeled_pairs(&lp, |n| c.id(n)), Err(Error::Parse { line: 1, .. })));

        let gp = dir.path().join("graded.tsv");
        fs::write(&gp, "dog\tanimal\t3.5\ncat\tthing\t1\n").unwrap();
        let g = load_graded(&gp).unwrap();
        assert_eq!(g[0].2, 3.5);
        fs::write(&gp, "dog\tanimal\thigh\n").unwrap();
        assert!(load_graded(&gp).is_err());

        let mp = dir.path().join("map.tsv");
        fs::write(&mp, "dog\tc,a\n").unwrap();
        let map = load_synset_map(&mp).unwrap();
        let pairs = graded_pairs(&g, &map, |n| c.id(n));
        assert_eq!(pairs[0].synsets_u.len(), 2);
        assert!(pairs[0].synsets_v.is_empty());
        assert!(pairs[1].synsets_u.is_empty());
    }
}
