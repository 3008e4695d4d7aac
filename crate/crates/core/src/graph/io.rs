use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;

use super::{Graph, GraphBuilder};
use crate::error::{Error, Result};

/// A parsed edge list together with what was discarded while reading it.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub self_loops: usize,
}

fn split_edge(line: &str) -> Option<(&str, &str)> {
    if line.contains('\t') {
        let mut parts = line.split('\t');
        let (u, v) = (parts.next()?.trim(), parts.next()?.trim());
        if parts.next().is_some() || u.is_empty() || v.is_empty() {
            return None;
        }
        Some((u, v))
    } else {
        // Whitespace-separated pairs are accepted as well.
        let mut parts = line.split_whitespace();
        let (u, v) = (parts.next()?, parts.next()?);
        if parts.next().is_some() {
            return None;
        }
        Some((u, v))
    }
}

/// Parses edge-list text: one `u<TAB>v` pair per line, `#` comments and
/// blank lines ignored. `origin` is only used in error messages.
pub fn parse_edge_list(reader: impl BufRead, origin: &Path) -> Result<LoadedGraph> {
    let mut builder = GraphBuilder::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (u, v) = split_edge(trimmed).ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            msg: format!("expected two vertex ids separated by a TAB, got {trimmed:?}"),
        })?;
        builder.add_edge(u, v);
    }
    let self_loops = builder.self_loops();
    if self_loops > 0 {
        warn!("{}: dropped {self_loops} self-loop(s)", origin.display());
    }
    Ok(LoadedGraph {
        graph: builder.build(),
        self_loops,
    })
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path)
}

/// Writes the graph as a TAB-separated edge list with a schema header.
/// Isolated vertices cannot be represented and are omitted.
pub fn write_edge_list(graph: &Graph, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# memewatch edge-list schema_version=1")?;
    writeln!(
        out,
        "# vertices={} edges={}",
        graph.n_vertices(),
        graph.n_edges()
    )?;
    for (u, v) in graph.edges() {
        writeln!(out, "{}\t{}", graph.id(u), graph.id(v))?;
    }
    Ok(())
}
