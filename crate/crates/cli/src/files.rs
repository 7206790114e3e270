//! Reading inputs and writing provenance-stamped outputs.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ase_core::downstream::LabeledNodes;
use ase_core::io::{read_embedding_bin, read_embedding_tsv, read_labels, Provenance};
use ase_core::{load_edge_list, Embedding, HopWeights, LoadOptions, LoadedGraph};
use nalgebra::DMatrix;
use thiserror::Error;

use crate::GraphArgs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        source: ase_core::Error,
    },

    #[error(transparent)]
    Core(#[from] ase_core::Error),
}

impl CliError {
    /// 2 for bad input or parameters, 3 for failures while running.
    pub fn exit_code(&self) -> u8 {
        use ase_core::Error as E;
        match self {
            CliError::NotFound(_) | CliError::Usage(_) | CliError::Input { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidParameter(_)
                | E::DegenerateSpec(_)
                | E::DimensionTooLarge { .. }
                | E::TooLargeForDense { .. }
                | E::KatzDivergence { .. } => 2,
                _ => 3,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Err(CliError::NotFound(path.into())),
        Err(source) => Err(CliError::Io {
            path: path.into(),
            source,
        }),
    }
}

pub fn load_graph(args: &GraphArgs) -> CliResult<LoadedGraph> {
    let opts = LoadOptions {
        dedupe: !args.strict,
        drop_isolated: args.drop_isolated,
    };
    let loaded = load_edge_list(open(&args.input)?, opts).map_err(|source| CliError::Input {
        path: args.input.clone(),
        source,
    })?;
    log::info!(
        "loaded {} nodes, {} edges from {}",
        loaded.graph.n_nodes(),
        loaded.graph.n_edges(),
        args.input.display()
    );
    Ok(loaded)
}

/// Reads a TSV or binary embedding. Both may start with `#` header lines; a
/// binary body is recognized by its magic bytes.
pub fn load_embedding(path: &Path) -> CliResult<Embedding> {
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })?;
    let input_err = |source| CliError::Input {
        path: path.into(),
        source,
    };
    let mut body = bytes.as_slice();
    while body.first() == Some(&b'#') {
        match body.iter().position(|&b| b == b'\n') {
            Some(end) => body = &body[end + 1..],
            None => body = &[],
        }
    }
    if body.starts_with(b"ASEEMB") {
        return read_embedding_bin(body).map_err(input_err);
    }
    let (ids, matrix) = read_embedding_tsv(body).map_err(input_err)?;
    let dim = matrix.ncols();
    Ok(Embedding {
        matrix,
        node_ids: Some(ids),
        // Hop weights are not stored in the TSV body.
        theta: HopWeights::uniform(1),
        dim,
    })
}

/// Reorders embedding rows to match the node order of `ids`.
pub fn align_embedding(e: &Embedding, ids: &[i64]) -> CliResult<Embedding> {
    let row_of: HashMap<i64, usize> = (0..e.n_nodes()).map(|i| (e.node_id(i), i)).collect();
    let mut matrix = DMatrix::zeros(ids.len(), e.matrix.ncols());
    for (i, id) in ids.iter().enumerate() {
        let &r = row_of
            .get(id)
            .ok_or_else(|| CliError::Usage(format!("embedding has no row for node {id}")))?;
        matrix.row_mut(i).copy_from(&e.matrix.row(r));
    }
    Ok(Embedding {
        matrix,
        node_ids: Some(ids.to_vec()),
        theta: e.theta.clone(),
        dim: e.dim,
    })
}

pub fn load_labels(path: &Path, ids: &[i64]) -> CliResult<LabeledNodes> {
    let index: HashMap<i64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let (labeled, names) = read_labels(open(path)?, &index).map_err(|source| CliError::Input {
        path: path.into(),
        source,
    })?;
    log::info!(
        "{} labeled nodes, {} classes",
        labeled.nodes.len(),
        names.len()
    );
    Ok(labeled)
}

/// `dir/<stem><suffix>`, with `dir` defaulting to the input's directory.
pub fn sibling(input: &Path, dir: Option<&Path>, suffix: &str) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "graph".into());
    let dir = dir
        .map(Path::to_path_buf)
        .or_else(|| input.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    dir.join(format!("{stem}{suffix}"))
}

/// Output sink: a file, or stdout when no path is given.
pub struct Output {
    path: Option<PathBuf>,
    inner: Box<dyn Write>,
}

impl Output {
    pub fn create(path: Option<&Path>) -> CliResult<Self> {
        let inner: Box<dyn Write> = match path {
            Some(p) => {
                let io_err = |source| CliError::Io {
                    path: p.into(),
                    source,
                };
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(io_err)?;
                }
                Box::new(BufWriter::new(File::create(p).map_err(io_err)?))
            }
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self {
            path: path.map(Path::to_path_buf),
            inner,
        })
    }

    /// Creates the sink and writes the provenance header.
    pub fn with_header(path: Option<&Path>, prov: &Provenance) -> CliResult<Self> {
        let mut out = Self::create(path)?;
        prov.write(&mut out)?;
        Ok(out)
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.inner.flush().map_err(|source| CliError::Io {
            path: self.path.clone().unwrap_or_else(|| "<stdout>".into()),
            source,
        })?;
        if let Some(p) = &self.path {
            log::info!("wrote {}", p.display());
        }
        Ok(())
    }
}

impl Write for Output {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.inner.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}
