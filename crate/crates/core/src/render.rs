//! Batch render backends: decision rasters and κ heatmaps as SVG, binary PPM
//! or CSV. Output is byte-deterministic.
//!
//! Colour tables (sRGB):
//!
//! | use                         | value               | RGB           |
//! |-----------------------------|---------------------|---------------|
//! | two-colour raster           | correct             | 255, 255, 255 |
//! | two-colour raster           | incorrect           |  31,  78, 156 |
//! | fraction raster             | all models correct  | 253, 224, 221 |
//! | fraction raster             | no model correct    | 103,   0,  13 |
//! | heatmap                     | κ = −1              |  33, 102, 172 |
//! | heatmap                     | κ =  0              | 247, 247, 247 |
//! | heatmap                     | κ = +1              | 178,  24,  43 |
//! | heatmap, undefined κ (PPM)  | 2×2 checker         | 128, 128, 128 / 255, 255, 255 |
//!
//! Intermediate values interpolate linearly per channel and round half away
//! from zero. In SVG, undefined κ cells are filled with a diagonal hatch.

use std::fmt::Write as _;

use crate::consistency::KappaMatrix;
use crate::decision_log::DecisionCube;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    /// Linear blend: `t = 0` gives `self`, `t = 1` gives `other`.
    fn lerp(self, other: Rgb, t: f64) -> Rgb {
        let mix = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8;
        Rgb(mix(self.0, other.0), mix(self.1, other.1), mix(self.2, other.2))
    }
}

pub const CORRECT: Rgb = Rgb(255, 255, 255);
pub const INCORRECT: Rgb = Rgb(31, 78, 156);
pub const ALL_CORRECT: Rgb = Rgb(253, 224, 221);
pub const NONE_CORRECT: Rgb = Rgb(103, 0, 13);
pub const KAPPA_NEG: Rgb = Rgb(33, 102, 172);
pub const KAPPA_ZERO: Rgb = Rgb(247, 247, 247);
pub const KAPPA_POS: Rgb = Rgb(178, 24, 43);
const UNDEFINED_DARK: Rgb = Rgb(128, 128, 128);
const UNDEFINED_LIGHT: Rgb = Rgb(255, 255, 255);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderTarget {
    Svg,
    Ppm,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorMap {
    /// White for correct, blue for incorrect.
    TwoColor,
    /// Light to dark red by fraction of correct decisions.
    Fraction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RenderSpec {
    pub target: RenderTarget,
    pub cell_width: u32,
    pub cell_height: u32,
    /// Images per raster row; `None` picks `ceil(images / 1024)`.
    pub binning: Option<usize>,
    /// `None` uses the raster mode's default.
    pub color_map: Option<ColorMap>,
}

impl RenderSpec {
    pub fn new(target: RenderTarget) -> Self {
        RenderSpec { target, cell_width: 4, cell_height: 1, binning: None, color_map: None }
    }

    fn validate(&self) -> Result<()> {
        if self.cell_width == 0 || self.cell_height == 0 {
            return Err(Error::InvalidInput("render dimensions must be positive".into()));
        }
        if self.binning == Some(0) {
            return Err(Error::InvalidInput("binning must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    Svg(String),
    Ppm(Vec<u8>),
    Csv(String),
}

impl Document {
    pub fn into_bytes(self) -> Vec<u8> {
        match self {
            Document::Svg(s) | Document::Csv(s) => s.into_bytes(),
            Document::Ppm(b) => b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RasterMode {
    /// One model, two-colour by default.
    SingleModel(String),
    /// All models, shaded by fraction correct.
    Ensemble,
}

pub fn default_binning(images: usize) -> usize {
    images.div_ceil(1024).max(1)
}

/// Row-major grid of fractions: `rows` binned image rows × `cols` epochs.
fn raster_grid(
    cube: &DecisionCube,
    ordering: &[usize],
    mode: &RasterMode,
    binning: usize,
) -> Result<(usize, usize, Vec<f64>)> {
    let n = cube.n_images();
    if ordering.len() != n {
        return Err(Error::InvalidInput(format!(
            "ordering has {} entries for {n} images",
            ordering.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in ordering {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidInput("ordering is not a permutation of the images".into()));
        }
    }
    let models: Vec<usize> = match mode {
        RasterMode::SingleModel(id) => vec![cube.model_index(id)?],
        RasterMode::Ensemble => (0..cube.n_models()).collect(),
    };
    let rows = n.div_ceil(binning);
    let cols = cube.n_epochs();
    let mut grid = vec![0.0; rows * cols];
    for (r, chunk) in ordering.chunks(binning).enumerate() {
        for e in 0..cols {
            let hits: usize = models
                .iter()
                .map(|&m| {
                    let plane = cube.plane(m, e);
                    chunk.iter().filter(|&&i| plane.get(i)).count()
                })
                .sum();
            grid[r * cols + e] = hits as f64 / (chunk.len() * models.len()) as f64;
        }
    }
    Ok((rows, cols, grid))
}

fn fraction_color(map: ColorMap, f: f64) -> Rgb {
    match map {
        ColorMap::TwoColor => INCORRECT.lerp(CORRECT, f),
        ColorMap::Fraction => NONE_CORRECT.lerp(ALL_CORRECT, f),
    }
}

fn kappa_color(k: f64) -> Rgb {
    let k = k.clamp(-1.0, 1.0);
    if k < 0.0 {
        KAPPA_ZERO.lerp(KAPPA_NEG, -k)
    } else {
        KAPPA_ZERO.lerp(KAPPA_POS, k)
    }
}

fn ppm(width: usize, height: usize, pixel: impl Fn(usize, usize) -> Rgb) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let c = pixel(x, y);
            out.extend_from_slice(&[c.0, c.1, c.2]);
        }
    }
    out
}

fn svg_open(out: &mut String, width: usize, height: usize) {
    write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" shape-rendering=\"crispEdges\">\n"
    )
    .expect("string write");
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Rows are (binned) images in `ordering`, columns are epochs.
pub fn render_decision_raster(
    cube: &DecisionCube,
    ordering: &[usize],
    mode: &RasterMode,
    spec: &RenderSpec,
) -> Result<Document> {
    spec.validate()?;
    let binning = spec.binning.unwrap_or_else(|| default_binning(cube.n_images()));
    let (rows, cols, grid) = raster_grid(cube, ordering, mode, binning)?;
    let map = spec.color_map.unwrap_or(match mode {
        RasterMode::SingleModel(_) => ColorMap::TwoColor,
        RasterMode::Ensemble => ColorMap::Fraction,
    });
    let (cw, ch) = (spec.cell_width as usize, spec.cell_height as usize);
    Ok(match spec.target {
        RenderTarget::Csv => {
            let mut out = String::from("row");
            for e in cube.epochs() {
                write!(out, ",epoch_{e}").expect("string write");
            }
            out.push('\n');
            for r in 0..rows {
                write!(out, "{r}").expect("string write");
                for c in 0..cols {
                    write!(out, ",{:.6}", grid[r * cols + c]).expect("string write");
                }
                out.push('\n');
            }
            Document::Csv(out)
        }
        RenderTarget::Ppm => Document::Ppm(ppm(cols * cw, rows * ch, |x, y| {
            fraction_color(map, grid[(y / ch) * cols + x / cw])
        })),
        RenderTarget::Svg => {
            let mut out = String::new();
            svg_open(&mut out, cols * cw, rows * ch);
            for r in 0..rows {
                for c in 0..cols {
                    let color = fraction_color(map, grid[r * cols + c]).hex();
                    writeln!(
                        out,
                        "<rect x=\"{}\" y=\"{}\" width=\"{cw}\" height=\"{ch}\" fill=\"{color}\"/>",
                        c * cw,
                        r * ch
                    )
                    .expect("string write");
                }
            }
            out.push_str("</svg>\n");
            Document::Svg(out)
        }
    })
}

const LABEL_CHAR_WIDTH: usize = 7;
const LABEL_PAD: usize = 6;

/// κ heatmap with labelled axes; undefined cells are hatched (SVG) or
/// checkered (PPM).
pub fn render_heatmap(matrix: &KappaMatrix, spec: &RenderSpec) -> Result<Document> {
    spec.validate()?;
    let n = matrix.labels.len();
    if matrix.values.len() != n || matrix.values.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("heatmap needs a square matrix".into()));
    }
    let (cw, ch) = (spec.cell_width as usize, spec.cell_height as usize);
    Ok(match spec.target {
        RenderTarget::Csv => Document::Csv(matrix.to_csv()),
        RenderTarget::Ppm => Document::Ppm(ppm(n * cw, n * ch, |x, y| {
            match matrix.values[y / ch][x / cw] {
                Some(k) => kappa_color(k),
                None if (x / 2 + y / 2) % 2 == 0 => UNDEFINED_DARK,
                None => UNDEFINED_LIGHT,
            }
        })),
        RenderTarget::Svg => {
            let longest = matrix.labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
            let margin = longest * LABEL_CHAR_WIDTH + LABEL_PAD;
            let (w, h) = (margin + n * cw, margin + n * ch);
            let mut out = String::new();
            svg_open(&mut out, w, h);
            out.push_str(concat!(
                "<defs><pattern id=\"undefined\" width=\"4\" height=\"4\" patternUnits=\"userSpaceOnUse\">",
                "<rect width=\"4\" height=\"4\" fill=\"#ffffff\"/>",
                "<path d=\"M0,4 L4,0\" stroke=\"#808080\" stroke-width=\"1\"/></pattern></defs>\n"
            ));
            out.push_str("<g font-family=\"monospace\" font-size=\"10\">\n");
            for (i, label) in matrix.labels.iter().enumerate() {
                let label = xml_escape(label);
                let y = margin + i * ch + ch / 2;
                writeln!(
                    out,
                    "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" dominant-baseline=\"middle\">{label}</text>",
                    margin - LABEL_PAD / 2
                )
                .expect("string write");
                let x = margin + i * cw + cw / 2;
                writeln!(
                    out,
                    "<text x=\"{x}\" y=\"{}\" text-anchor=\"start\" dominant-baseline=\"middle\" transform=\"rotate(-90 {x} {})\">{label}</text>",
                    margin - LABEL_PAD / 2,
                    margin - LABEL_PAD / 2
                )
                .expect("string write");
            }
            out.push_str("</g>\n");
            for (i, row) in matrix.values.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let (x, y) = (margin + j * cw, margin + i * ch);
                    let fill = match v {
                        Some(k) => kappa_color(*k).hex(),
                        None => "url(#undefined)".to_string(),
                    };
                    let title = match v {
                        Some(k) => format!("{k:.6}"),
                        None => "undefined".to_string(),
                    };
                    writeln!(
                        out,
                        "<rect x=\"{x}\" y=\"{y}\" width=\"{cw}\" height=\"{ch}\" fill=\"{fill}\"><title>{title}</title></rect>"
                    )
                    .expect("string write");
                }
            }
            out.push_str("</svg>\n");
            Document::Svg(out)
        }
    })
}
