//! Per-checkpoint metric rows, the K × layer heatmap matrices, and their
//! CSV / SVG export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use cayley_algebra::OperatorKind;
use cayley_model::Params;

use crate::family::{build_identity_sets, build_permutation_sets, sample_probe_inputs, ProbeConfig, ProbeInputs};
use crate::metrics::{s_com, s_ide};
use crate::ProbeError;

/// The order-sensitive operators each metric is compared against.
pub const PROBED_OPERATORS: [OperatorKind; 3] = [
    OperatorKind::Ominus,
    OperatorKind::Left,
    OperatorKind::Right,
];

/// Which metric a heatmap carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// S_com: permutation-variance difference.
    Com,
    /// S_ide: insertion-distance difference.
    Ide,
}

impl MetricKind {
    /// Stable lowercase name used in file names and titles.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Com => "s_com",
            MetricKind::Ide => "s_ide",
        }
    }
}

/// One checkpoint's metric means: for each order-sensitive operator, a value
/// per snapshot (layers + 1 of them, starting at the embedding).
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointProbe {
    /// Mean S_com per layer, keyed by the order-sensitive operator.
    pub s_com: BTreeMap<OperatorKind, Vec<f64>>,
    /// Mean S_ide per layer, keyed by the order-sensitive operator.
    pub s_ide: BTreeMap<OperatorKind, Vec<f64>>,
}

impl CheckpointProbe {
    /// Number of snapshots each row carries (`layers + 1`).
    pub fn snapshots(&self) -> usize {
        self.s_com.values().next().map_or(0, Vec::len)
    }
}

/// Runs the full probe battery against one checkpoint: `+` against each of
/// `⊖`/`◁`/`▷`, both metrics, every layer. Entries are means over the probe
/// inputs, so they are comparable across checkpoints probed with the same
/// [`ProbeInputs`].
pub fn probe_checkpoint(
    params: &Params,
    inputs: &ProbeInputs,
    position: Option<usize>,
) -> Result<CheckpointProbe, ProbeError> {
    let plus_perm = build_permutation_sets(params, inputs, OperatorKind::Plus, position)?;
    let plus_ide = build_identity_sets(params, inputs, OperatorKind::Plus, position)?;
    let snapshots = params.config.layers + 1;

    let mut com_map = BTreeMap::new();
    let mut ide_map = BTreeMap::new();
    for other in PROBED_OPERATORS {
        let other_perm = build_permutation_sets(params, inputs, other, position)?;
        let other_ide = build_identity_sets(params, inputs, other, position)?;

        let mut com_row = Vec::with_capacity(snapshots);
        let mut ide_row = Vec::with_capacity(snapshots);
        for layer in 0..snapshots {
            let mut com_sum = 0.0f64;
            for (p, o) in plus_perm.iter().zip(&other_perm) {
                com_sum += s_com(p, o, layer)?;
            }
            com_row.push(com_sum / plus_perm.len() as f64);

            let mut ide_sum = 0.0f64;
            for (p, o) in plus_ide.iter().zip(&other_ide) {
                ide_sum += s_ide(p, o, layer)?;
            }
            ide_row.push(ide_sum / plus_ide.len() as f64);
        }
        com_map.insert(other, com_row);
        ide_map.insert(other, ide_row);
    }
    Ok(CheckpointProbe {
        s_com: com_map,
        s_ide: ide_map,
    })
}

/// One metric-vs-operator matrix over a sweep: rows indexed by K, columns by
/// snapshot (1-based layer index 1..=layers+1, column 1 the embedding).
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapMatrix {
    /// Which metric the entries are.
    pub metric: MetricKind,
    /// The order-sensitive operator the `+` metric is compared against.
    pub other: OperatorKind,
    /// Row index: sweep K values, ascending.
    pub k_values: Vec<usize>,
    /// `k_values.len()` rows of `layers + 1` entries each.
    pub rows: Vec<Vec<f64>>,
}

impl HeatmapMatrix {
    /// Stable file stem, e.g. `s_com_lt`.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.metric.name(), self.other.token())
    }

    /// CSV rendering: a header row of 1-based layer indices, then one row
    /// per K.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k");
        let width = self.rows.first().map_or(0, Vec::len);
        for layer in 1..=width {
            let _ = write!(out, ",{layer}");
        }
        out.push('\n');
        for (k, row) in self.k_values.iter().zip(&self.rows) {
            let _ = write!(out, "{k}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Static SVG rendering: one rect per entry, green for ≥ 0 and purple
    /// for < 0, intensity scaled to the largest |entry|.
    pub fn to_svg(&self) -> String {
        const CELL_W: usize = 72;
        const CELL_H: usize = 34;
        const LEFT: usize = 84;
        const TOP: usize = 52;
        let cols = self.rows.first().map_or(0, Vec::len);
        let rows = self.rows.len();
        let width = LEFT + cols * CELL_W + 16;
        let height = TOP + rows * CELL_H + 16;
        let max_abs = self
            .rows
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
             font-family=\"monospace\" font-size=\"12\">"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{LEFT}\" y=\"20\">{} vs {} (green ≥ 0, purple &lt; 0)</text>",
            self.metric.name(),
            self.other.token()
        );
        for c in 0..cols {
            let x = LEFT + c * CELL_W + CELL_W / 2;
            let _ = writeln!(
                svg,
                "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">l{}</text>",
                TOP - 8,
                c + 1
            );
        }
        for (r, (k, row)) in self.k_values.iter().zip(&self.rows).enumerate() {
            let y = TOP + r * CELL_H;
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">K={k}</text>",
                LEFT - 8,
                y + CELL_H / 2 + 4
            );
            for (c, &v) in row.iter().enumerate() {
                let x = LEFT + c * CELL_W;
                // Interpolate white → full color by |v| / max.
                let t = (v.abs() / max_abs).clamp(0.0, 1.0);
                let (r8, g8, b8) = if v >= 0.0 {
                    // white (255,255,255) → green (26,127,55)
                    mix((255, 255, 255), (26, 127, 55), t)
                } else {
                    // white → purple (111,66,193)
                    mix((255, 255, 255), (111, 66, 193), t)
                };
                let _ = writeln!(
                    svg,
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" \
                     fill=\"rgb({r8},{g8},{b8})\" stroke=\"#ccc\"/>"
                );
                let text_fill = if t > 0.55 { "#fff" } else { "#111" };
                let _ = writeln!(
                    svg,
                    "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{text_fill}\">{v:.3}</text>",
                    x + CELL_W / 2,
                    y + CELL_H / 2 + 4
                );
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn mix(from: (u8, u8, u8), to: (u8, u8, u8), t: f64) -> (u8, u8, u8) {
    let ch = |a: u8, b: u8| -> u8 {
        (a as f64 + (b as f64 - a as f64) * t).round().clamp(0.0, 255.0) as u8
    };
    (ch(from.0, to.0), ch(from.1, to.1), ch(from.2, to.2))
}

/// Probes every checkpoint of a sweep with one shared probe-input sample and
/// assembles the six heatmap matrices (S_com and S_ide against each of
/// `⊖`/`◁`/`▷`).
///
/// `checkpoints` are `(K, params)` pairs in strictly ascending K order; all
/// checkpoints must share one architecture and vocabulary.
pub fn build_heatmaps(
    checkpoints: &[(usize, Params)],
    config: &ProbeConfig,
) -> Result<Vec<HeatmapMatrix>, ProbeError> {
    let Some((_, first)) = checkpoints.first() else {
        return Err(ProbeError::Config("no checkpoints to probe".to_string()));
    };
    for pair in checkpoints.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(ProbeError::Config(format!(
                "K values must be strictly ascending, got {} after {}",
                pair[1].0, pair[0].0
            )));
        }
    }
    for (k, params) in checkpoints {
        if params.config != first.config {
            return Err(ProbeError::ConfigMismatch(format!(
                "checkpoint at K = {k} has a different architecture"
            )));
        }
        if params.vocab != first.vocab {
            return Err(ProbeError::ConfigMismatch(format!(
                "checkpoint at K = {k} has a different vocabulary"
            )));
        }
    }

    let inputs = sample_probe_inputs(config)?;
    let probes: Vec<CheckpointProbe> = checkpoints
        .iter()
        .map(|(_, params)| probe_checkpoint(params, &inputs, config.position))
        .collect::<Result<_, _>>()?;

    let k_values: Vec<usize> = checkpoints.iter().map(|(k, _)| *k).collect();
    let mut matrices = Vec::with_capacity(6);
    for metric in [MetricKind::Com, MetricKind::Ide] {
        for other in PROBED_OPERATORS {
            let rows: Vec<Vec<f64>> = probes
                .iter()
                .map(|p| match metric {
                    MetricKind::Com => p.s_com[&other].clone(),
                    MetricKind::Ide => p.s_ide[&other].clone(),
                })
                .collect();
            matrices.push(HeatmapMatrix {
                metric,
                other,
                k_values: k_values.clone(),
                rows,
            });
        }
    }
    Ok(matrices)
}
