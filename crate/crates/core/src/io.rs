//! Document formats: JSON space/loop/word documents, DOT graph export, and
//! small CSV writers. Everything here is deterministic given the same
//! inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rips::{Presentation, ScalePoint, ScaleSet, Side, Word};
use crate::spaces::{
    graph_to_space, hawaiian_truncation, product_space, sample_circle, validate_metric, wedge,
    FiniteMetricSpace, MetricGraph,
};

/// The space document accepted by every command:
/// `{"kind": "matrix"|"graph"|"generator", ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceDoc {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDoc {
    pub vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
    /// Subdivision mesh; defaults to the shortest edge (no subdivision of
    /// the shortest, longer edges split to match).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum GeneratorDoc {
    Circle {
        circumference: f64,
        n: usize,
    },
    Product {
        a: Box<SpaceDoc>,
        b: Box<SpaceDoc>,
    },
    Wedge {
        a: Box<SpaceDoc>,
        b: Box<SpaceDoc>,
        a0: usize,
        b0: usize,
    },
    Hawaiian {
        k: usize,
        n_per_circle: usize,
    },
}

impl SpaceDoc {
    pub fn from_json(text: &str) -> Result<SpaceDoc> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn build(&self) -> Result<FiniteMetricSpace> {
        let mut space = match self.kind.as_str() {
            "matrix" => {
                let m = self.matrix.as_ref().ok_or_else(|| {
                    Error::Document("kind \"matrix\" needs a matrix field".into())
                })?;
                validate_metric(m).map_err(Error::InvalidMetric)?
            }
            "graph" => {
                let g = self
                    .graph
                    .as_ref()
                    .ok_or_else(|| Error::Document("kind \"graph\" needs a graph field".into()))?;
                let mg = MetricGraph {
                    vertices: g.vertices,
                    edges: g.edges.clone(),
                };
                let mesh = match g.mesh {
                    Some(h) => h,
                    None => g
                        .edges
                        .iter()
                        .map(|&(_, _, l)| l)
                        .fold(f64::INFINITY, f64::min),
                };
                graph_to_space(&mg, mesh)?
            }
            "generator" => {
                let g = self.generator.as_ref().ok_or_else(|| {
                    Error::Document("kind \"generator\" needs a generator field".into())
                })?;
                build_generator(g)?
            }
            other => {
                return Err(Error::Document(format!(
                    "unknown kind {other:?}; expected matrix, graph, or generator"
                )))
            }
        };
        if let Some(bp) = self.basepoint {
            space = space.with_basepoint(bp)?;
        }
        if let Some(labels) = &self.labels {
            space = space.with_labels(labels.clone());
        }
        Ok(space)
    }
}

fn build_generator(g: &GeneratorDoc) -> Result<FiniteMetricSpace> {
    match g {
        GeneratorDoc::Circle { circumference, n } => sample_circle(*circumference, *n),
        GeneratorDoc::Product { a, b } => product_space(&a.build()?, &b.build()?),
        GeneratorDoc::Wedge { a, b, a0, b0 } => wedge(&a.build()?, &b.build()?, *a0, *b0),
        GeneratorDoc::Hawaiian { k, n_per_circle } => hawaiian_truncation(*k, *n_per_circle),
    }
}

/// Loop document: `{"scale": 0.8, "points": [0, 1, ..., 0]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopDoc {
    pub scale: f64,
    pub points: Vec<usize>,
}

impl LoopDoc {
    pub fn from_json(text: &str) -> Result<LoopDoc> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }
}

/// Word family document: a reference scale and signed generator indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordsDoc {
    pub scale: String,
    pub words: Vec<Vec<i32>>,
}

impl WordsDoc {
    pub fn from_json(text: &str) -> Result<WordsDoc> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn words(&self) -> Vec<Word> {
        self.words.iter().map(|w| Word(w.clone())).collect()
    }
}

/// Parse a scale argument: `"3:at"`, `"3:above"`, or a raw value snapped to
/// the enclosing side interval.
pub fn parse_scale(scales: &ScaleSet, text: &str) -> Result<ScalePoint> {
    if let Some((idx, side)) = text.split_once(':') {
        let index: usize = idx
            .parse()
            .map_err(|_| Error::Document(format!("bad scale index {idx:?}")))?;
        let side = match side {
            "at" => Side::At,
            "above" => Side::Above,
            other => return Err(Error::Document(format!("bad scale side {other:?}"))),
        };
        let sp = ScalePoint { index, side };
        scales.check(sp)?;
        Ok(sp)
    } else {
        let eps: f64 = text
            .parse()
            .map_err(|_| Error::Document(format!("bad scale value {text:?}")))?;
        scales.locate(eps)
    }
}

/// DOT export of the Rips graph at a scale point, tree edges of the
/// presentation drawn bold.
pub fn rips_dot(
    space: &FiniteMetricSpace,
    edges: &[(usize, usize)],
    pres: Option<&Presentation>,
) -> String {
    let mut out = String::from("graph rips {\n");
    for i in 0..space.n() {
        out.push_str(&format!("  n{} [label=\"{}\"];\n", i, space.label(i)));
    }
    for &(u, v) in edges {
        let is_tree = pres
            .map(|p| p.tree_parent[u] == Some(v) || p.tree_parent[v] == Some(u))
            .unwrap_or(false);
        if is_tree {
            out.push_str(&format!("  n{u} -- n{v} [style=bold];\n"));
        } else {
            out.push_str(&format!("  n{u} -- n{v};\n"));
        }
    }
    out.push_str("}\n");
    out
}

/// DOT export of a cover ball: vertices labeled base:class.
pub fn cover_dot(cover: &crate::covers::CoverBall) -> String {
    let mut out = String::from("graph cover {\n");
    for (i, v) in cover.vertices.iter().enumerate() {
        let marker = if i == cover.center {
            ", shape=doublecircle"
        } else {
            ""
        };
        out.push_str(&format!(
            "  n{} [label=\"{}:{}\"{}];\n",
            i, v.base, v.class, marker
        ));
    }
    for &(a, b, _) in &cover.edges {
        out.push_str(&format!("  n{a} -- n{b};\n"));
    }
    out.push_str("}\n");
    out
}

/// CSV for a spectrum report: value, level, witness length.
pub fn spectrum_csv(report: &crate::spectrum::SpectrumReport) -> String {
    let mut out = String::from("value,covering_value,level,multiplicity,witness_length\n");
    for (e, c) in report.entries.iter().zip(&report.covering_spectrum) {
        out.push_str(&format!(
            "{},{},{:?},{},{}\n",
            e.value,
            c,
            e.level,
            e.multiplicity,
            e.witness.len()
        ));
    }
    out
}

/// CSV matrix of rho values with inf/skip markers.
pub fn ultra_csv(table: &crate::topology::UltrametricTable) -> String {
    let mut out = String::new();
    let n = table.words.len();
    out.push_str("word");
    for j in 0..n {
        out.push_str(&format!(",w{j}"));
    }
    out.push('\n');
    for i in 0..n {
        out.push_str(&format!("w{i}"));
        for j in 0..n {
            out.push_str(&format!(",{}", table.rho[i][j]));
        }
        out.push('\n');
    }
    out
}

/// CSV of a family report.
pub fn family_csv(report: &crate::spectrum::FamilyReport) -> String {
    let mut out = String::from("k,count,min_value,values\n");
    for row in &report.rows {
        let min = row
            .min_value
            .map(|v| v.to_string())
            .unwrap_or_else(|| "-".into());
        let values: Vec<String> = row.values.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.k,
            row.count,
            min,
            values.join(";")
        ));
    }
    out
}

/// Presentation export: generators as vertex pairs, relators as signed
/// sequences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresentationDoc {
    pub basepoint: usize,
    pub generators: Vec<(usize, usize)>,
    pub relators: Vec<Vec<i32>>,
}

impl From<&Presentation> for PresentationDoc {
    fn from(p: &Presentation) -> Self {
        PresentationDoc {
            basepoint: p.basepoint,
            generators: p.generators.clone(),
            relators: p.relators.iter().map(|r| r.0.clone()).collect(),
        }
    }
}
