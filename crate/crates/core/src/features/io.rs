//! File formats: trajectory and text JSONL, and the feature-matrix CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureVector, MemeTrajectory};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const FEATURE_SCHEMA_VERSION: u32 = 1;

/// Paragraphs of text surrounding one meme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemeText {
    pub meme_id: String,
    pub paragraphs: Vec<String>,
}

/// The `schema_version=N` value of a `#` header line, if it has one.
fn header_version(line: &str) -> Option<u32> {
    line.strip_prefix('#')?
        .split("schema_version=")
        .nth(1)?
        .split_whitespace()
        .next()?
        .parse()
        .ok()
}

/// Reads JSON lines, skipping blank and `#` comment lines. A comment
/// declaring a `schema_version` other than the supported one is an error.
/// Items come back with their 1-based line numbers.
fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with('#') {
            match header_version(&line) {
                Some(found) if found != FEATURE_SCHEMA_VERSION => {
                    return Err(Error::SchemaVersion {
                        found,
                        expected: FEATURE_SCHEMA_VERSION,
                    })
                }
                _ => continue,
            }
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push((i + 1, item));
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(kind: &str, items: &[T], mut out: impl Write) -> Result<()> {
    writeln!(out, "# memewatch {kind} schema_version={FEATURE_SCHEMA_VERSION}").map_err(|e| Error::io("<output>", e))?;
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

/// One `{"meme_id": ..., "events": [[t, source], ...]}` object per line,
/// after an optional `#` schema comment.
/// Every trajectory is validated (sorted, first post at t = 0).
pub fn read_trajectories_jsonl(path: impl AsRef<Path>) -> Result<Vec<MemeTrajectory>> {
    let path = path.as_ref();
    read_jsonl::<MemeTrajectory>(path)?
        .into_iter()
        .map(|(line, t)| {
            t.validate().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: e.to_string(),
            })?;
            Ok(t)
        })
        .collect()
}

pub fn write_trajectories_jsonl(trajectories: &[MemeTrajectory], out: impl Write) -> Result<()> {
    write_jsonl("trajectories", trajectories, out)
}

/// One `{"meme_id": ..., "paragraphs": [...]}` object per line.
pub fn read_texts_jsonl(path: impl AsRef<Path>) -> Result<Vec<MemeText>> {
    Ok(read_jsonl(path.as_ref())?.into_iter().map(|(_, t)| t).collect())
}

pub fn write_texts_jsonl(texts: &[MemeText], out: impl Write) -> Result<()> {
    write_jsonl("texts", texts, out)
}

/// Writes the feature matrix: a `# ... schema_version=N` comment line, a
/// header row, then one row per meme with the columns
/// `meme_id, tau_hours, happiness, arousal, dominance, polarity, n_posts,
/// post_rate, community_dispersion, k_core_blogs, es_blogs, label`.
pub fn write_feature_csv<T: Real>(rows: &[FeatureVector<T>], mut out: impl Write) -> Result<()> {
    writeln!(out, "# memewatch features schema_version={FEATURE_SCHEMA_VERSION}")
        .map_err(|e| Error::io("<output>", e))?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "meme_id",
            "tau_hours",
            "happiness",
            "arousal",
            "dominance",
            "polarity",
            "n_posts",
            "post_rate",
            "community_dispersion",
            "k_core_blogs",
            "es_blogs",
            "label",
        ])?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn read_feature_csv<T: Real>(path: impl AsRef<Path>) -> Result<Vec<FeatureVector<T>>> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    let version = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .and_then(|l| l.split("schema_version=").nth(1))
        .and_then(|v| v.trim().parse::<u32>().ok());
    match version {
        Some(FEATURE_SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(Error::SchemaVersion {
                found,
                expected: FEATURE_SCHEMA_VERSION,
            })
        }
        None => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: "missing schema_version header".into(),
            })
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Event, MemeLabel};

    #[test]
    fn feature_csv_round_trip_and_layout() {
        let rows = vec![FeatureVector {
            meme_id: "m1".to_owned(),
            tau_hours: 12.0,
            happiness: 5.5,
            arousal: 0.0,
            dominance: 1.25,
            polarity: -1.0,
            n_posts: 4,
            post_rate: 1.0 / 6.0,
            community_dispersion: 2,
            k_core_blogs: 1,
            es_blogs: 0,
            label: MemeLabel::Successful,
        }];
        let mut buf = Vec::new();
        write_feature_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# memewatch features schema_version=1");
        assert_eq!(
            lines.next().unwrap(),
            "meme_id,tau_hours,happiness,arousal,dominance,polarity,n_posts,post_rate,community_dispersion,k_core_blogs,es_blogs,label"
        );
        assert_eq!(
            lines.next().unwrap(),
            "m1,12.0,5.5,0.0,1.25,-1.0,4,0.16666666666666666,2,1,0,successful"
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, &text).unwrap();
        let back: Vec<FeatureVector<f64>> = read_feature_csv(&path).unwrap();
        assert_eq!(back, rows);

        std::fs::write(&path, text.replace("schema_version=1", "schema_version=9")).unwrap();
        assert!(matches!(
            read_feature_csv::<f64>(&path),
            Err(Error::SchemaVersion { found: 9, .. })
        ));
    }

    #[test]
    fn trajectory_jsonl_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let t = MemeTrajectory::new("m", vec![Event(0.0, "a".into()), Event(1.5, "b".into())]).unwrap();
        let mut buf = Vec::new();
        write_trajectories_jsonl(std::slice::from_ref(&t), &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("# memewatch trajectories schema_version=1\n"));
        std::fs::write(&path, &buf).unwrap();
        assert_eq!(read_trajectories_jsonl(&path).unwrap(), vec![t]);

        std::fs::write(&path, "{\"meme_id\":\"m\",\"events\":[[2.0,\"a\"]]}\n").unwrap();
        assert!(matches!(read_trajectories_jsonl(&path), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&path, "\n{not json}\n").unwrap();
        assert!(matches!(read_trajectories_jsonl(&path), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&path, "# memewatch trajectories schema_version=1\n{\"meme_id\":\"m\",\"events\":[[1.0,\"a\"]]}\n").unwrap();
        assert!(matches!(read_trajectories_jsonl(&path), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&path, "# memewatch trajectories schema_version=7\n").unwrap();
        assert!(matches!(read_trajectories_jsonl(&path), Err(Error::SchemaVersion { found: 7, .. })));
    }
}
