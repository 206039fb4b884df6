use serde::{Deserialize, Serialize};

use super::{Mask, Volume};
use crate::error::{Error, Result};

/// HU display window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub level: f64,
    pub width: f64,
}

impl WindowSpec {
    pub fn new(level: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0 && level.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "window width must be > 0 (level {level}, width {width})"
            )));
        }
        Ok(WindowSpec { level, width })
    }

    /// Soft-tissue abdominal window, level 40 / width 400.
    pub fn abdomen() -> Self {
        WindowSpec {
            level: 40.0,
            width: 400.0,
        }
    }

    #[inline]
    pub fn map(&self, hu: f64) -> u8 {
        let lo = self.level - self.width / 2.0;
        (255.0 * (hu - lo) / self.width).round().clamp(0.0, 255.0) as u8
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec::abdomen()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    fn name(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    /// (column axis, row axis) of a slice normal to `self`.
    fn plane(self) -> (usize, usize) {
        match self {
            Axis::X => (1, 2),
            Axis::Y => (0, 2),
            Axis::Z => (0, 1),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidParameter(format!("unknown axis {other:?}"))),
        }
    }
}

/// Row-major 8-bit image. `channels` is 1 (gray) or 3 (RGB).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image2D {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl Image2D {
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(if self.channels == 3 {
                png::ColorType::Rgb
            } else {
                png::ColorType::Grayscale
            });
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
            w.write_image_data(&self.pixels)
                .map_err(|e| Error::Png(e.to_string()))?;
        }
        Ok(out)
    }
}

fn slice_coords(
    dims: [usize; 3],
    axis: Axis,
    index: usize,
) -> Result<(usize, usize, impl Fn(usize, usize) -> [usize; 3])> {
    let a = axis.index();
    if index >= dims[a] {
        return Err(Error::OutOfBounds {
            axis: axis.name(),
            index,
            len: dims[a],
        });
    }
    let (col, row) = axis.plane();
    let at = move |c: usize, r: usize| {
        let mut p = [0usize; 3];
        p[a] = index;
        p[col] = c;
        p[row] = r;
        p
    };
    Ok((dims[col], dims[row], at))
}

/// Grayscale slice normal to `axis`. Columns follow the lower remaining
/// axis, rows the higher one (a z-slice is `nx` wide and `ny` tall).
pub fn render_slice(volume: &Volume, axis: Axis, index: usize, window: WindowSpec) -> Result<Image2D> {
    let g = volume.geometry();
    let (width, height, at) = slice_coords(g.dims, axis, index)?;
    let mut pixels = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let [x, y, z] = at(c, r);
            pixels.push(window.map(volume.get(x, y, z) as f64));
        }
    }
    Ok(Image2D {
        width,
        height,
        channels: 1,
        pixels,
    })
}

/// RGB slice with the in-plane outline of `mask` drawn in red.
pub fn render_slice_with_overlay(
    volume: &Volume,
    mask: &Mask,
    axis: Axis,
    index: usize,
    window: WindowSpec,
) -> Result<Image2D> {
    volume.geometry().ensure_same(mask.geometry(), "overlay mask")?;
    let gray = render_slice(volume, axis, index, window)?;
    let g = *mask.geometry();
    let (width, height, at) = slice_coords(g.dims, axis, index)?;
    let set = |c: i64, r: i64| -> bool {
        if c < 0 || r < 0 || c as usize >= width || r as usize >= height {
            return false;
        }
        let [x, y, z] = at(c as usize, r as usize);
        mask.is_set(g.index(x, y, z))
    };
    let mut pixels = Vec::with_capacity(width * height * 3);
    for r in 0..height {
        for c in 0..width {
            let v = gray.pixels[r * width + c];
            let (ci, ri) = (c as i64, r as i64);
            let edge = set(ci, ri)
                && [(-1, 0), (1, 0), (0, -1), (0, 1)]
                    .iter()
                    .any(|(dc, dr)| !set(ci + dc, ri + dr));
            if edge {
                pixels.extend_from_slice(&[255, 0, 0]);
            } else {
                pixels.extend_from_slice(&[v, v, v]);
            }
        }
    }
    Ok(Image2D {
        width,
        height,
        channels: 3,
        pixels,
    })
}
