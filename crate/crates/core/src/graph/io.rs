use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;

use super::{KnowledgeGraph, Label, NameTable, Triple};
use crate::error::{Error, Result};

/// Result of importing one or more triple files.
#[derive(Clone, Debug)]
pub struct TsvImport {
    pub graph: KnowledgeGraph,
    /// Lines whose triple was already seen (in this or an earlier file).
    pub duplicate_lines: usize,
    pub lines: usize,
}

/// Reads `head<TAB>relation<TAB>tail` files, interning names across every
/// file it reads so ids stay consistent between them.
#[derive(Debug, Default)]
pub struct TsvReader {
    entities: NameTable,
    relations: NameTable,
}

impl TsvReader {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses one file and returns its triples in line order, duplicates
    /// included.
    pub fn read_path(&mut self, path: &Path) -> Result<Vec<Triple>> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        self.read(BufReader::new(file), path)
    }

    pub fn read<R: BufRead>(&mut self, reader: R, origin: &Path) -> Result<Vec<Triple>> {
        let mut out = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                message,
            };
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            if let Some(i) = fields.iter().position(|f| f.is_empty()) {
                let which = ["head", "relation", "tail"][i];
                return Err(parse_err(format!("empty {which} field")));
            }
            let head = self.entities.intern(fields[0]);
            let relation = self.relations.intern(fields[1]);
            let tail = self.entities.intern(fields[2]);
            out.push(Triple::new(head, relation, tail));
        }
        Ok(out)
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    /// Builds a graph over everything interned so far from `triples`,
    /// returning it with the number of duplicates dropped.
    pub fn build<'a, I>(&self, triples: I, label: Label) -> (KnowledgeGraph, usize)
    where
        I: IntoIterator<Item = &'a Triple>,
    {
        let mut g = KnowledgeGraph::new(self.n_entities(), self.n_relations())
            .with_names(self.entities.clone(), self.relations.clone());
        let mut duplicates = 0;
        for t in triples {
            if !g.insert(*t, label) {
                duplicates += 1;
            }
        }
        (g, duplicates)
    }
}

/// Imports a single triple file (FB15K-237 layout, no header).
pub fn import_tsv(path: impl AsRef<Path>) -> Result<TsvImport> {
    import_tsv_files(&[path.as_ref().to_path_buf()])
}

/// Imports and merges several triple files into one graph.
pub fn import_tsv_files(paths: &[PathBuf]) -> Result<TsvImport> {
    let mut reader = TsvReader::new();
    let mut all = Vec::new();
    for path in paths {
        all.extend(reader.read_path(path)?);
    }
    if all.is_empty() {
        let path = paths.first().cloned().unwrap_or_default();
        return Err(Error::EmptyInput(path));
    }
    let (graph, duplicate_lines) = reader.build(&all, Label::Unlabeled);
    if duplicate_lines > 0 {
        warn!("dropped {duplicate_lines} duplicate triple lines");
    }
    Ok(TsvImport {
        graph,
        duplicate_lines,
        lines: all.len(),
    })
}

/// Writes `triples` as TSV lines using `g`'s names (or synthetic `e<id>` /
/// `r<id>` names when the graph has none).
pub fn write_tsv<'a, W, I>(g: &KnowledgeGraph, triples: I, writer: W) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Triple>,
{
    let mut w = BufWriter::new(writer);
    for t in triples {
        writeln!(
            w,
            "{}\t{}\t{}",
            g.entity_name(t.head),
            g.relation_name(t.relation),
            g.entity_name(t.tail)
        )?;
    }
    w.flush()
}

pub fn export_tsv(g: &KnowledgeGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_tsv(g, g.triples(), file).map_err(|e| Error::io(path, e))
}
