//! Density rendering to binary PPM.

use num_complex::Complex64;
use std::io::{self, Write};

/// Viewport and raster size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub width: usize,
    pub height: usize,
    pub gamma: f64,
}

pub const MIN_RES: usize = 16;
pub const DEFAULT_GAMMA: f64 = 0.5;

impl RenderSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.re_min < self.re_max && self.im_min < self.im_max) {
            return Err("viewport is empty".into());
        }
        if self.width < MIN_RES || self.height < MIN_RES {
            return Err(format!("resolution must be at least {MIN_RES}x{MIN_RES}"));
        }
        if !(self.gamma > 0.0) {
            return Err("gamma must be positive".into());
        }
        Ok(())
    }

    /// Smallest viewport containing `points`, padded by 5%.
    pub fn fit(points: &[Complex64], width: usize, height: usize) -> RenderSpec {
        let (mut a, mut b, mut c, mut d) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for z in points {
            a = a.min(z.re);
            b = b.max(z.re);
            c = c.min(z.im);
            d = d.max(z.im);
        }
        let pr = ((b - a) * 0.05).max(0.5);
        let pi = ((d - c) * 0.05).max(0.5);
        RenderSpec { re_min: a - pr, re_max: b + pr, im_min: c - pi, im_max: d + pi, width, height, gamma: DEFAULT_GAMMA }
    }

    fn pixel(&self, z: Complex64) -> Option<(usize, usize)> {
        let x = (z.re - self.re_min) / (self.re_max - self.re_min) * self.width as f64;
        let y = (self.im_max - z.im) / (self.im_max - self.im_min) * self.height as f64;
        if x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64 {
            Some((x as usize, y as usize))
        } else {
            None
        }
    }

    fn pixel_size(&self) -> f64 {
        ((self.re_max - self.re_min) / self.width as f64).min((self.im_max - self.im_min) / self.height as f64)
    }
}

/// Hit counts per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    pub spec: RenderSpec,
    pub counts: Vec<u32>,
}

impl Density {
    pub fn new(spec: RenderSpec) -> Density {
        Density { spec, counts: vec![0; spec.width * spec.height] }
    }

    pub fn hit(&mut self, z: Complex64) {
        if let Some((x, y)) = self.spec.pixel(z) {
            self.counts[y * self.spec.width + x] += 1;
        }
    }

    /// Adds a polyline, subdividing each segment at pixel spacing.
    pub fn polyline(&mut self, points: &[Complex64]) {
        let h = self.spec.pixel_size();
        if let Some(&p) = points.first() {
            self.hit(p);
        }
        for w in points.windows(2) {
            let n = ((w[1] - w[0]).norm() / h).ceil().clamp(1.0, 1e5) as usize;
            for i in 1..=n {
                self.hit(w[0] + (w[1] - w[0]) * (i as f64 / n as f64));
            }
        }
    }

    pub fn nonzero(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Binary P6 with a comment line; grey level `255 (count/max)^γ`.
    pub fn write_ppm<W: Write>(&self, out: &mut W, comment: &str) -> io::Result<()> {
        write!(out, "P6\n# {comment}\n{} {}\n255\n", self.spec.width, self.spec.height)?;
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let mut buf = Vec::with_capacity(self.counts.len() * 3);
        for &c in &self.counts {
            let v = (255.0 * (c as f64 / max).powf(self.spec.gamma)).round() as u8;
            buf.extend_from_slice(&[v, v, v]);
        }
        out.write_all(&buf)
    }
}

/// Parses `re_min,re_max,im_min,im_max`.
pub fn parse_viewport(text: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> =
        text.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad viewport component {t:?}"))).collect::<Result<_, _>>()?;
    if v.len() != 4 || v.iter().any(|x| !x.is_finite()) {
        return Err("viewport needs four finite numbers".into());
    }
    Ok([v[0], v[1], v[2], v[3]])
}

/// Parses `WIDTHxHEIGHT`.
pub fn parse_res(text: &str) -> Result<(usize, usize), String> {
    let (w, h) = text.split_once(['x', 'X']).ok_or("resolution must look like 512x512")?;
    let w = w.trim().parse().map_err(|_| "bad width")?;
    let h = h.trim().parse().map_err(|_| "bad height")?;
    Ok((w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_lights_a_row() {
        let spec = RenderSpec { re_min: 0.0, re_max: 16.0, im_min: 0.0, im_max: 16.0, width: 16, height: 16, gamma: 0.5 };
        let mut d = Density::new(spec);
        d.polyline(&[Complex64::new(0.5, 8.5), Complex64::new(15.5, 8.5)]);
        assert_eq!(d.nonzero(), 16);
        let mut buf = Vec::new();
        d.write_ppm(&mut buf, "t").unwrap();
        assert!(buf.starts_with(b"P6\n# t\n16 16\n255\n"));
        assert_eq!(buf.len(), "P6\n# t\n16 16\n255\n".len() + 16 * 16 * 3);
    }

    #[test]
    fn parse_helpers() {
        assert_eq!(parse_viewport("0,1,-2,2").unwrap(), [0.0, 1.0, -2.0, 2.0]);
        assert!(parse_viewport("0,1,2").is_err());
        assert_eq!(parse_res("64x32").unwrap(), (64, 32));
        assert!(parse_res("64").is_err());
    }
}
