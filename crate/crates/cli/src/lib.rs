//! Grid rendering of escape classifications and the argument parsers shared by
//! the `hairlab` binary.

use std::collections::BTreeMap;

use hairlab::escape::{classify_point, EscapeVerdict};
use hairlab::functions::{max_modulus, FamilyKind, FunctionFamily};
use hairlab::logtransform::Address;
use hairlab::{Complex, HairError, Tower};
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MAX_SIDE: u32 = 16384;

/// Parse `a+bi`, `a-bi`, `a`, `bi` or `i`.
pub fn parse_complex(s: &str) -> Result<Complex, String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number {s:?}");
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|re| Complex::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    let z = Complex::new(re, im);
    if z.is_finite() {
        Ok(z)
    } else {
        Err(bad())
    }
}

/// `0` is constant, `1,-1` periodic, `2,0|1` a prefix then a periodic tail.
pub fn parse_address(s: &str) -> Result<Address, String> {
    let list = |p: &str| -> Result<Vec<i64>, String> {
        p.split(',').map(|x| x.trim().parse::<i64>().map_err(|_| format!("bad address entry {x:?}"))).collect()
    };
    match s.split_once('|') {
        Some((pre, tail)) => Ok(Address::prefix_periodic(list(pre)?, list(tail)?)),
        None => Ok(Address::periodic(list(s)?)),
    }
}

pub fn parse_kind(s: &str) -> Result<FamilyKind, String> {
    match s {
        "exp" => Ok(FamilyKind::ExpFamily),
        "fatou" => Ok(FamilyKind::FatouMap),
        "affine" => Ok(FamilyKind::AffineExp),
        "star" => Ok(FamilyKind::StarMap),
        _ => Err(format!("unknown family {s:?} (exp, fatou, affine, star)")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PixelVerdict {
    Fast,
    Escaping,
    NonEscaping,
    Indeterminate,
}

impl PixelVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            PixelVerdict::Fast => "fast",
            PixelVerdict::Escaping => "escaping",
            PixelVerdict::NonEscaping => "non-escaping",
            PixelVerdict::Indeterminate => "indeterminate",
        }
    }
}

pub fn default_palette() -> BTreeMap<PixelVerdict, [u8; 3]> {
    BTreeMap::from([
        (PixelVerdict::Fast, [230, 60, 40]),
        (PixelVerdict::Escaping, [250, 200, 60]),
        (PixelVerdict::NonEscaping, [20, 30, 70]),
        (PixelVerdict::Indeterminate, [128, 128, 128]),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderJob {
    pub family: FunctionFamily,
    /// `(re_min, re_max, im_min, im_max)`
    pub window: (f64, f64, f64, f64),
    pub pixels: (u32, u32),
    pub horizon: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub l_max: usize,
    pub palette: BTreeMap<PixelVerdict, [u8; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub x: f64,
    pub y: f64,
    pub verdict: PixelVerdict,
    pub escaping: EscapeVerdict,
    pub zip_exceeds_one: bool,
    pub fast_level: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub width: u32,
    pub height: u32,
    /// Row-major, row 0 at the top of the window.
    pub cells: Vec<Cell>,
}

impl RenderJob {
    pub fn validate(&self) -> Result<(), HairError> {
        let (a, b, c, d) = self.window;
        if !(a < b && c < d) || ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(HairError::Precondition("degenerate window".into()));
        }
        let (w, h) = self.pixels;
        if w == 0 || h == 0 || w > MAX_SIDE || h > MAX_SIDE {
            return Err(HairError::Precondition(format!("pixels must be 1..={MAX_SIDE} per side")));
        }
        if self.horizon == 0 {
            return Err(HairError::Precondition("horizon must be at least 1".into()));
        }
        if !max_modulus(&self.family, self.r)?.gt(&Tower::from_real(self.r)?) {
            return Err(HairError::InadmissibleR(self.r));
        }
        Ok(())
    }

    pub fn center(&self, i: u32, j: u32) -> Complex {
        let (a, b, c, d) = self.window;
        let (w, h) = self.pixels;
        Complex::new(a + (i as f64 + 0.5) * (b - a) / w as f64, d - (j as f64 + 0.5) * (d - c) / h as f64)
    }
}

fn cell(job: &RenderJob, z: Complex) -> Cell {
    let base = Cell { x: z.re, y: z.im, verdict: PixelVerdict::Indeterminate, escaping: EscapeVerdict::Indeterminate, zip_exceeds_one: false, fast_level: None };
    let Ok(v) = classify_point(&job.family, z, job.horizon, job.r, job.l_max) else {
        return base;
    };
    let fast_level = v.fast_level.level();
    let verdict = match (v.escaping, fast_level) {
        (EscapeVerdict::Indeterminate, _) => PixelVerdict::Indeterminate,
        (EscapeVerdict::NotEscapedAtHorizon, _) => PixelVerdict::NonEscaping,
        (EscapeVerdict::CertifiedAtHorizon, Some(_)) => PixelVerdict::Fast,
        (EscapeVerdict::CertifiedAtHorizon, None) => PixelVerdict::Escaping,
    };
    Cell { verdict, escaping: v.escaping, zip_exceeds_one: v.zip_exceeds_one, fast_level, ..base }
}

/// Row-parallel classification of every pixel centre; `threads` caps the pool.
pub fn render(job: &RenderJob, threads: Option<usize>) -> Result<Rendered, HairError> {
    job.validate()?;
    let (w, h) = job.pixels;
    let run = || -> Vec<Cell> {
        (0..h)
            .into_par_iter()
            .flat_map_iter(|j| (0..w).map(move |i| cell(job, job.center(i, j))).collect::<Vec<_>>())
            .collect()
    };
    let cells = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| HairError::Precondition(e.to_string()))?
            .install(run),
        None => run(),
    };
    Ok(Rendered { width: w, height: h, cells })
}

impl Rendered {
    /// Pixels breaking fast ⊆ zipping ⊆ escaping.
    pub fn nesting_violations(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| {
                let escaping = c.escaping == EscapeVerdict::CertifiedAtHorizon;
                (c.fast_level.is_some() && !c.zip_exceeds_one) || (c.zip_exceeds_one && !escaping)
            })
            .count()
    }

    pub fn counts(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for c in &self.cells {
            *m.entry(c.verdict.name()).or_insert(0) += 1;
        }
        m
    }

    pub fn png(&self, palette: &BTreeMap<PixelVerdict, [u8; 3]>) -> Result<Vec<u8>, image::ImageError> {
        let buf: Vec<u8> = self.cells.iter().flat_map(|c| palette.get(&c.verdict).copied().unwrap_or([0, 0, 0])).collect();
        let mut out = Vec::new();
        PngEncoder::new(&mut out).write_image(&buf, self.width, self.height, ExtendedColorType::Rgb8)?;
        Ok(out)
    }

    pub fn csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "y", "verdict", "fast_level"])?;
        for c in &self.cells {
            let level = c.fast_level.map(|l| l.to_string()).unwrap_or_default();
            w.write_record([c.x.to_string(), c.y.to_string(), c.verdict.name().to_string(), level])?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}
