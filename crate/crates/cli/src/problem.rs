//! Problem files: JSON documents tagged by `"kind"`.

use extspec_core::graph::{
    dirichlet_extension, kirchhoff_extension, make_graph, neumann_extension, random_extension,
};
use extspec_core::oracle::fd::FdCondition;
use extspec_core::seba::SebaSpec;
use extspec_core::{CombinatorialGraph, ExtensionUnitary, GraphSpec, C64};
use nalgebra::DMatrix;
use serde::Deserialize;
use std::io::Read;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemFile {
    Graph {
        lengths: Vec<f64>,
        extension: ExtensionSpec,
    },
    Seba {
        sides: [f64; 2],
        point: [f64; 2],
        coupling: f64,
        truncation_ratio: f64,
    },
    Minmax {
        #[serde(rename = "N")]
        n: usize,
        d: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExtensionSpec {
    Dirichlet,
    Neumann,
    Kirchhoff {
        edges: Vec<[usize; 2]>,
        vertices: usize,
    },
    Unitary {
        matrix: Vec<Vec<[f64; 2]>>,
    },
    Random {
        seed: u64,
    },
}

/// A graph problem ready for the solver.
pub struct GraphProblem {
    pub graph: GraphSpec,
    pub unitary: ExtensionUnitary,
    /// Set for classical conditions the finite-difference oracle supports.
    pub classical: Option<FdCondition>,
}

pub struct MinmaxProblem {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

/// Reads a problem file, `-` meaning standard input.
pub fn read_problem(path: &str) -> Result<ProblemFile, CliError> {
    let mut text = String::new();
    if path == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Input(format!("reading stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("reading {path}: {e}")))?;
    }
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

impl ProblemFile {
    fn kind(&self) -> &'static str {
        match self {
            ProblemFile::Graph { .. } => "graph",
            ProblemFile::Seba { .. } => "seba",
            ProblemFile::Minmax { .. } => "minmax",
        }
    }

    pub fn into_graph(self) -> Result<GraphProblem, CliError> {
        let ProblemFile::Graph { lengths, extension } = self else {
            return Err(CliError::Input(format!(
                "expected a graph problem, found kind \"{}\"",
                self.kind()
            )));
        };
        let graph = make_graph(&lengths)?;
        let k = graph.edge_count();
        let (unitary, classical) = match extension {
            ExtensionSpec::Dirichlet => (dirichlet_extension(k), Some(FdCondition::Dirichlet)),
            ExtensionSpec::Neumann => (neumann_extension(k), Some(FdCondition::Neumann)),
            ExtensionSpec::Kirchhoff { edges, vertices } => {
                let comb = CombinatorialGraph::new(
                    vertices,
                    edges.iter().map(|e| (e[0], e[1])).collect(),
                )?;
                (kirchhoff_extension(&comb, k)?, Some(FdCondition::Kirchhoff(comb)))
            }
            ExtensionSpec::Unitary { matrix } => (unitary_from_rows(&matrix)?, None),
            ExtensionSpec::Random { seed } => (random_extension(k, seed), None),
        };
        unitary.check_graph(&graph)?;
        Ok(GraphProblem {
            graph,
            unitary,
            classical,
        })
    }

    pub fn into_seba(self) -> Result<SebaSpec, CliError> {
        let ProblemFile::Seba {
            sides,
            point,
            coupling,
            truncation_ratio,
        } = self
        else {
            return Err(CliError::Input(format!(
                "expected a seba problem, found kind \"{}\"",
                self.kind()
            )));
        };
        Ok(SebaSpec::new(
            (sides[0], sides[1]),
            (point[0], point[1]),
            coupling,
            truncation_ratio,
        )?)
    }

    pub fn into_minmax(self) -> Result<MinmaxProblem, CliError> {
        let ProblemFile::Minmax { n, d, seed } = self else {
            return Err(CliError::Input(format!(
                "expected a minmax problem, found kind \"{}\"",
                self.kind()
            )));
        };
        Ok(MinmaxProblem { n, d, seed })
    }
}

fn unitary_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<ExtensionUnitary, CliError> {
    let n = rows.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(CliError::Input(format!(
            "matrix row {bad} has {} entries, expected {n}",
            rows[bad].len()
        )));
    }
    let m = DMatrix::<C64>::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
    Ok(ExtensionUnitary::new(m)?)
}

/// The `"extension"` fragment for a unitary, every component printed with
/// 17 significant digits.
pub fn unitary_fragment(u: &ExtensionUnitary) -> String {
    let m = u.matrix();
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let entries: Vec<String> = (0..m.ncols())
                .map(|j| format!("[{:.16e},{:.16e}]", m[(i, j)].re, m[(i, j)].im))
                .collect();
            format!("[{}]", entries.join(","))
        })
        .collect();
    format!("{{\"type\":\"unitary\",\"matrix\":[{}]}}", rows.join(","))
}
