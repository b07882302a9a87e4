//! Plain-text `key=value` schedule configs.
//!
//! Pairs are separated by commas or newlines; `#` starts a comment. Nested
//! schedules of `kind=even_odd` use `even.` and `odd.` key prefixes. Custom
//! tables come either inline (`values=0.1;0.2;…` for `p_2, p_3, …`) or from a
//! two-column CSV (`table=path.csv` with rows `n,p_n`), followed by
//! `tail=constant:<v>` or `tail=last`.

use std::collections::BTreeSet;
use std::path::Path;

use super::{Schedule, ScheduleError, Tail};

/// Ordered `key=value` pairs with duplicate detection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    pairs: Vec<(String, String)>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self, ScheduleError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for item in line.split(',') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| ScheduleError::Config(format!("expected key=value, got `{item}`")))?;
                let k = k.trim().to_string();
                if pairs.iter().any(|(existing, _)| *existing == k) {
                    return Err(ScheduleError::Config(format!("duplicate key `{k}`")));
                }
                pairs.push((k, v.trim().to_string()));
            }
        }
        Ok(ConfigMap { pairs })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(k, _)| k.as_str())
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// Pairs under `prefix.`, with the prefix stripped.
    fn sub(&self, prefix: &str) -> ConfigMap {
        let dotted = format!("{prefix}.");
        ConfigMap {
            pairs: self
                .pairs
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(&dotted).map(|rest| (rest.to_string(), v.clone())))
                .collect(),
        }
    }
}

struct Reader<'a> {
    map: &'a ConfigMap,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(map: &'a ConfigMap) -> Self {
        Reader {
            map,
            used: BTreeSet::new(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        let v = self.map.get(key)?;
        self.used.insert(key.to_string());
        Some(v)
    }

    fn required(&mut self, key: &str) -> Result<&'a str, ScheduleError> {
        self.raw(key)
            .ok_or_else(|| ScheduleError::Config(format!("missing key `{key}`")))
    }

    fn f64(&mut self, key: &str) -> Result<f64, ScheduleError> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| ScheduleError::Config(format!("`{key}` expects a number, got `{v}`")))
    }

    fn n0(&mut self) -> Result<usize, ScheduleError> {
        match self.raw("n0") {
            None => Ok(1),
            Some(v) => v
                .parse()
                .map_err(|_| ScheduleError::Config(format!("`n0` expects a positive integer, got `{v}`"))),
        }
    }

    fn mark_prefix(&mut self, prefix: &str) {
        let dotted = format!("{prefix}.");
        for k in self.map.keys() {
            if k.starts_with(&dotted) {
                self.used.insert(k.to_string());
            }
        }
    }

    fn finish(self) -> Result<(), ScheduleError> {
        let unknown: Vec<&str> = self.map.keys().filter(|k| !self.used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ScheduleError::Config(format!("unknown key(s): {}", unknown.join(", "))))
        }
    }
}

impl Schedule {
    /// Parses inline config text; table paths resolve against the working directory.
    pub fn parse(text: &str) -> Result<Self, ScheduleError> {
        Self::from_config(&ConfigMap::parse(text)?, None)
    }

    pub fn from_config(map: &ConfigMap, base_dir: Option<&Path>) -> Result<Self, ScheduleError> {
        let mut r = Reader::new(map);
        let kind = r.required("kind")?;
        let mut first_from_table = None;
        let schedule = match kind {
            "constant" => Schedule::constant(r.f64("c")?)?,
            "power_cooling" => Schedule::power_cooling(r.f64("a")?, r.f64("gamma")?, r.n0()?)?,
            "critical_cooling" => Schedule::critical_cooling(r.f64("c")?, r.n0()?)?,
            "harmonic_heating" => Schedule::harmonic_heating(r.f64("c")?, r.n0()?)?,
            "power_heating" => Schedule::power_heating(r.f64("c")?, r.f64("gamma")?, r.n0()?)?,
            "factorial" => Schedule::factorial_counterexample(),
            "uniform_footnote" => Schedule::uniform_footnote(),
            "even_odd" => {
                let even = Schedule::from_config(&map.sub("even"), base_dir)?;
                let odd = Schedule::from_config(&map.sub("odd"), base_dir)?;
                r.mark_prefix("even");
                r.mark_prefix("odd");
                Schedule::even_odd(even, odd)
            }
            "custom" => {
                let tail = parse_tail(r.required("tail")?)?;
                let values = match (r.raw("values"), r.raw("table")) {
                    (Some(inline), None) => parse_inline(inline)?,
                    (None, Some(path)) => {
                        let path = match base_dir {
                            Some(dir) => dir.join(path),
                            None => Path::new(path).to_path_buf(),
                        };
                        let (first, values) = read_table(&path)?;
                        first_from_table = first;
                        values
                    }
                    _ => {
                        return Err(ScheduleError::Config(
                            "custom schedules need exactly one of `values` or `table`".into(),
                        ))
                    }
                };
                Schedule::custom(values, tail)?
            }
            other => return Err(ScheduleError::Config(format!("unknown kind `{other}`"))),
        };
        let schedule = match (r.raw("first"), first_from_table) {
            (Some(v), _) => {
                let p: f64 = v
                    .parse()
                    .map_err(|_| ScheduleError::Config(format!("`first` expects a number, got `{v}`")))?;
                schedule.with_first(p)?
            }
            (None, Some(p)) => schedule.with_first(p)?,
            (None, None) => schedule,
        };
        r.finish()?;
        Ok(schedule)
    }
}

fn parse_tail(v: &str) -> Result<Tail, ScheduleError> {
    if v == "last" {
        return Ok(Tail::Last);
    }
    let c = v
        .strip_prefix("constant:")
        .ok_or_else(|| ScheduleError::Config(format!("tail must be `constant:<v>` or `last`, got `{v}`")))?;
    c.parse()
        .map(Tail::Constant)
        .map_err(|_| ScheduleError::Config(format!("bad tail constant `{c}`")))
}

fn parse_inline(v: &str) -> Result<Vec<f64>, ScheduleError> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| ScheduleError::Config(format!("bad table value `{s}`")))
        })
        .collect()
}

/// Reads `n,p_n` rows. Returns `p_1` if present and `p_2, p_3, …`.
fn read_table(path: &Path) -> Result<(Option<f64>, Vec<f64>), ScheduleError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ScheduleError::Table(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ScheduleError::Table(e.to_string()))?;
        if record.len() != 2 {
            return Err(ScheduleError::Table(format!("row {}: expected 2 columns", i + 1)));
        }
        let n = record[0].parse::<usize>();
        let p = record[1].parse::<f64>();
        match (n, p) {
            (Ok(n), Ok(p)) => rows.push((n, p)),
            // header row
            _ if i == 0 => continue,
            _ => return Err(ScheduleError::Table(format!("row {}: not `n,p_n`", i + 1))),
        }
    }
    let start = rows.first().map(|r| r.0).unwrap_or(2);
    if start != 1 && start != 2 {
        return Err(ScheduleError::Table(format!("table must start at n=1 or n=2, starts at {start}")));
    }
    for (offset, (n, _)) in rows.iter().enumerate() {
        if *n != start + offset {
            return Err(ScheduleError::Table(format!("table rows must be consecutive; found n={n}")));
        }
    }
    let mut values: Vec<f64> = rows.into_iter().map(|(_, p)| p).collect();
    let first = if start == 1 && !values.is_empty() {
        Some(values.remove(0))
    } else {
        None
    };
    Ok((first, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_families() {
        let s = Schedule::parse("kind=critical_cooling, c=1.0, n0=1").unwrap();
        assert_eq!(s, Schedule::critical_cooling(1.0, 1).unwrap());
        let s = Schedule::parse("kind=power_cooling\na=1\ngamma=0.5 # comment\nfirst=0.25").unwrap();
        assert_eq!(s, Schedule::power_cooling(1.0, 0.5, 1).unwrap().with_first(0.25).unwrap());
    }

    #[test]
    fn rejects_unknown_and_missing_keys() {
        assert!(Schedule::parse("kind=constant,c=0.3,colour=blue").is_err());
        assert!(Schedule::parse("kind=constant").is_err());
        assert!(Schedule::parse("kind=nope").is_err());
        assert!(Schedule::parse("kind=constant,c=0.3,c=0.4").is_err());
        assert!(Schedule::parse("kind=even_odd,even.kind=constant,even.c=0.2,odd.kind=constant,odd.c=0.9,odd.x=1").is_err());
    }

    #[test]
    fn round_trips_through_canonical_form() {
        let cases = [
            Schedule::constant(0.3).unwrap(),
            Schedule::harmonic_heating(1.0, 3).unwrap().with_first(0.0).unwrap(),
            Schedule::power_heating(1.0, 0.5, 1).unwrap(),
            Schedule::factorial_counterexample(),
            Schedule::uniform_footnote(),
            Schedule::custom(vec![0.1, 0.25], Tail::Constant(0.0)).unwrap(),
            Schedule::even_odd(
                Schedule::constant(0.9).unwrap(),
                Schedule::custom(vec![0.1], Tail::Last).unwrap(),
            ),
        ];
        for s in cases {
            let text = s.to_config();
            assert_eq!(Schedule::parse(&text).unwrap(), s, "{text}");
        }
    }

    #[test]
    fn reads_csv_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "n,p_n\n1,0.0\n2,0.1\n3,0.2").unwrap();
        drop(f);
        let s = Schedule::parse(&format!("kind=custom,table={},tail=constant:0.3", path.display())).unwrap();
        assert_eq!(s.prob(1), 0.0);
        assert_eq!(s.prob(2), 0.1);
        assert_eq!(s.prob(3), 0.2);
        assert_eq!(s.prob(4), 0.3);

        let rel = Schedule::from_config(
            &ConfigMap::parse("kind=custom,table=p.csv,tail=last").unwrap(),
            Some(dir.path()),
        )
        .unwrap();
        assert_eq!(rel.prob(50), 0.2);

        let gap = dir.path().join("gap.csv");
        std::fs::write(&gap, "2,0.1\n4,0.2\n").unwrap();
        assert!(Schedule::parse(&format!("kind=custom,table={},tail=last", gap.display())).is_err());
    }
}
