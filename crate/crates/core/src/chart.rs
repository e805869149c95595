//! Deterministic radar charts.
//!
//! A chart is a regular polygon of axes with one closed series polygon per
//! device (or aggregate). The first axis points at 12 o'clock and axes
//! proceed clockwise; a value of 1.0 plots at the full grid radius. Output
//! is plain SVG with no timestamps, no randomness, and no external assets,
//! so equal specs yield byte-identical documents.
//!
//! Axes with no recorded value plot at radius zero with an open-circle
//! marker and a footnote, keeping overlays comparable across devices.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::model::{CaseFile, FactorId};
use crate::percent::Rational;
use crate::scoring::{category_iqa, ScoringError};
use crate::taxonomy::InfoStatus;

const CANVAS: f64 = 600.0;
const CENTER_X: f64 = 300.0;
const CENTER_Y: f64 = 310.0;
const RADIUS: f64 = 200.0;
const LABEL_OFFSET: f64 = 18.0;

/// Series colors, assigned round-robin.
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// One axis entry of a series: a value in [0, 1], or no recorded value.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AxisValue {
    Scored(Rational),
    Missing,
}

/// One polygon: a label for the legend plus per-axis values.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RadarSeries {
    pub label: String,
    pub values: Vec<AxisValue>,
}

/// A validated chart description.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RadarSpec {
    title: String,
    axes: Vec<String>,
    series: Vec<RadarSeries>,
}

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum ChartError {
    #[error("a radar chart needs at least 3 axes, got {0}")]
    TooFewAxes(usize),
    #[error("series {label:?} has {actual} values for {expected} axes")]
    ArityMismatch {
        label: String,
        expected: usize,
        actual: usize,
    },
    #[error("series {label:?} axis {axis:?} value is outside [0, 1]")]
    ValueOutOfRange { label: String, axis: String },
    #[error("device {0:?} is not in the case")]
    UnknownDevice(String),
    #[error("nothing to chart: the case records no factor scores")]
    NothingToChart,
    #[error("{0}")]
    Scoring(String),
}

impl RadarSpec {
    pub fn new(
        title: impl Into<String>,
        axes: Vec<String>,
        series: Vec<RadarSeries>,
    ) -> Result<Self, ChartError> {
        if axes.len() < 3 {
            return Err(ChartError::TooFewAxes(axes.len()));
        }
        for s in &series {
            if s.values.len() != axes.len() {
                return Err(ChartError::ArityMismatch {
                    label: s.label.clone(),
                    expected: axes.len(),
                    actual: s.values.len(),
                });
            }
            for (axis, value) in axes.iter().zip(&s.values) {
                if let AxisValue::Scored(v) = value {
                    if *v < Rational::from_integer(0) || *v > Rational::from_integer(1) {
                        return Err(ChartError::ValueOutOfRange {
                            label: s.label.clone(),
                            axis: axis.clone(),
                        });
                    }
                }
            }
        }
        Ok(RadarSpec {
            title: title.into(),
            axes,
            series,
        })
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn series(&self) -> &[RadarSeries] {
        &self.series
    }
}

/// Pixel coordinate, two decimals, negative zero normalized away.
fn px(v: f64) -> String {
    let text = format!("{v:.2}");
    if text == "-0.00" {
        "0.00".to_string()
    } else {
        text
    }
}

fn xml_escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Vertex of axis `k` of `n` at radial fraction `f` (1.0 = grid radius).
fn vertex(k: usize, n: usize, f: f64) -> (f64, f64) {
    let angle = TAU * (k as f64) / (n as f64);
    (
        CENTER_X + RADIUS * f * angle.sin(),
        CENTER_Y - RADIUS * f * angle.cos(),
    )
}

fn ring_points(n: usize, f: f64) -> String {
    (0..n)
        .map(|k| {
            let (x, y) = vertex(k, n, f);
            format!("{},{}", px(x), px(y))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn fraction(value: &AxisValue) -> f64 {
    match value {
        AxisValue::Scored(v) => *v.numer() as f64 / *v.denom() as f64,
        AxisValue::Missing => 0.0,
    }
}

/// Renders the chart description to an SVG document.
pub fn render_radar(spec: &RadarSpec) -> String {
    let n = spec.axes.len();
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{c}\" height=\"{c}\" viewBox=\"0 0 {c} {c}\">\n",
        c = CANVAS as u32
    ));
    out.push_str(&format!("<title>{}</title>\n", xml_escape(&spec.title)));
    out.push_str(&format!(
        "<rect width=\"{c}\" height=\"{c}\" fill=\"#ffffff\"/>\n",
        c = CANVAS as u32
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        px(CENTER_X),
        xml_escape(&spec.title)
    ));

    for ring in [0.25, 0.5, 0.75, 1.0] {
        out.push_str(&format!(
            "<polygon class=\"grid\" points=\"{}\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n",
            ring_points(n, ring)
        ));
    }

    for k in 0..n {
        let (x, y) = vertex(k, n, 1.0);
        out.push_str(&format!(
            "<line class=\"spoke\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n",
            px(CENTER_X),
            px(CENTER_Y),
            px(x),
            px(y)
        ));
    }

    for (k, axis) in spec.axes.iter().enumerate() {
        let f = 1.0 + LABEL_OFFSET / RADIUS;
        let (x, y) = vertex(k, n, f);
        let sin = (TAU * (k as f64) / (n as f64)).sin();
        let anchor = if sin > 1e-6 {
            "start"
        } else if sin < -1e-6 {
            "end"
        } else {
            "middle"
        };
        out.push_str(&format!(
            "<text class=\"axis\" x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            px(x),
            px(y + 4.0),
            xml_escape(axis)
        ));
    }

    let mut any_missing = false;
    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points = series
            .values
            .iter()
            .enumerate()
            .map(|(k, value)| {
                let (x, y) = vertex(k, n, fraction(value));
                format!("{},{}", px(x), px(y))
            })
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "<polygon class=\"series\" points=\"{points}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"{color}\" stroke-width=\"2\"/>\n"
        ));
        for (k, value) in series.values.iter().enumerate() {
            if *value == AxisValue::Missing {
                any_missing = true;
                let (x, y) = vertex(k, n, 0.0);
                out.push_str(&format!(
                    "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#ffffff\" stroke=\"{color}\" stroke-width=\"1\"/>\n",
                    px(x),
                    px(y)
                ));
            }
        }
    }

    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let x = 20.0 + 190.0 * ((i % 3) as f64);
        let y = 544.0 + 18.0 * ((i / 3) as f64);
        out.push_str(&format!(
            "<rect class=\"swatch\" x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            px(x),
            px(y)
        ));
        out.push_str(&format!(
            "<text class=\"legend\" x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            px(x + 16.0),
            px(y + 10.0),
            xml_escape(&series.label)
        ));
    }

    if any_missing {
        out.push_str(&format!(
            "<text class=\"footnote\" x=\"{}\" y=\"592\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">open circles mark axes with no recorded value, drawn at radius 0</text>\n",
            px(CENTER_X)
        ));
    }

    out.push_str("</svg>\n");
    out
}

/// One series per device over every factor recorded anywhere in the case.
pub fn case_overlay(case: &CaseFile) -> Result<RadarSpec, ChartError> {
    let factors = case.recorded_factors();
    if factors.is_empty() {
        return Err(ChartError::NothingToChart);
    }
    let axes: Vec<String> = factors.iter().map(|f| f.code().to_string()).collect();
    let series = case
        .devices
        .iter()
        .map(|device| RadarSeries {
            label: device.device_id().to_string(),
            values: factors
                .iter()
                .map(|f| match device.score(*f) {
                    Some(score) => AxisValue::Scored(score.value().unit()),
                    None => AxisValue::Missing,
                })
                .collect(),
        })
        .collect();
    RadarSpec::new(
        format!("{} device factor profiles", case.case_id),
        axes,
        series,
    )
}

/// A single series over the three status aggregates.
pub fn category_overlay(case: &CaseFile) -> Result<RadarSpec, ChartError> {
    let axes: Vec<String> = InfoStatus::ALL
        .iter()
        .map(|s| s.aggregate_label().to_string())
        .collect();
    let mut values = Vec::with_capacity(3);
    for status in InfoStatus::ALL {
        match category_iqa(case, status) {
            Ok(result) => values.push(AxisValue::Scored(result.value.unit())),
            Err(ScoringError::EmptyCategory { .. }) => values.push(AxisValue::Missing),
            Err(other) => return Err(ChartError::Scoring(other.to_string())),
        }
    }
    RadarSpec::new(
        format!("{} status aggregates", case.case_id),
        axes,
        vec![RadarSeries {
            label: case.case_id.clone(),
            values,
        }],
    )
}

/// A single device's polygon over the case's recorded factor axes.
pub fn device_overlay(case: &CaseFile, device_id: &str) -> Result<RadarSpec, ChartError> {
    let device = case
        .device(device_id)
        .ok_or_else(|| ChartError::UnknownDevice(device_id.to_string()))?;
    let factors = case.recorded_factors();
    if factors.is_empty() {
        return Err(ChartError::NothingToChart);
    }
    let axes: Vec<String> = factors.iter().map(|f| f.code().to_string()).collect();
    let values = factors
        .iter()
        .map(|f| match device.score(*f) {
            Some(score) => AxisValue::Scored(score.value().unit()),
            None => AxisValue::Missing,
        })
        .collect();
    RadarSpec::new(
        format!("{} factor profile", device_id),
        axes,
        vec![RadarSeries {
            label: device_id.to_string(),
            values,
        }],
    )
}

/// The reference polygon: every factor at 1.0.
pub fn model_overlay() -> RadarSpec {
    RadarSpec::new(
        "model maximum".to_string(),
        FactorId::ALL.iter().map(|f| f.code().to_string()).collect(),
        vec![RadarSeries {
            label: "maximum".to_string(),
            values: vec![AxisValue::Scored(Rational::from_integer(1)); FactorId::COUNT],
        }],
    )
    .expect("the model spec is statically valid")
}
