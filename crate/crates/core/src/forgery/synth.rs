//! Procedural source footage: a camera panning across a value-noise texture
//! with a few moving blobs, optional frozen (static) stretches and sensor
//! noise. Camera motion is monotone, so distant frames never show the same
//! view.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{FrameBuffer, VideoClip};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub frames: usize,
    pub fps: f64,
    /// Pan speed range in pixels per frame.
    pub min_speed: f64,
    pub max_speed: f64,
    pub blobs: usize,
    /// `(start, length)` stretches where nothing moves.
    pub static_segments: Vec<(usize, usize)>,
    /// Per-sample Gaussian noise added to every frame.
    pub sensor_noise: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 48,
            channels: 3,
            frames: 300,
            fps: 30.0,
            min_speed: 1.5,
            max_speed: 3.0,
            blobs: 2,
            static_segments: Vec::new(),
            sensor_noise: 0.0,
        }
    }
}

/// Gain of the tanh contrast stretch applied to the standardized texture.
const CONTRAST: f64 = 1.5;

struct Texture {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Texture {
    fn value_noise(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut values = vec![0.0; width * height];
        for (scale, weight) in [(14.0, 0.55), (5.0, 0.3), (2.0, 0.15)] {
            let gw = (width as f64 / scale).ceil() as usize + 2;
            let gh = (height as f64 / scale).ceil() as usize + 2;
            let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
            let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
            for y in 0..height {
                let fy = y as f64 / scale;
                let (y0, ty) = (fy.floor() as usize, smooth(fy.fract()));
                for x in 0..width {
                    let fx = x as f64 / scale;
                    let (x0, tx) = (fx.floor() as usize, smooth(fx.fract()));
                    let at = |gx: usize, gy: usize| lattice[gy * gw + gx];
                    let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
                    let bottom = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
                    values[y * width + x] += weight * (top * (1.0 - ty) + bottom * ty);
                }
            }
        }
        // stretch contrast so unrelated views are far apart under cosine distance
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-9);
        for v in &mut values {
            *v = 0.5 + 0.5 * (CONTRAST * (*v - mean) / std).tanh();
        }
        Self {
            width,
            height,
            values,
        }
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let at = |xx: usize, yy: usize| self.values[yy * self.width + xx];
        let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
        let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

struct Blob {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    radius: f64,
    level: f64,
}

/// Renders a synthetic clip. The same `(params, seed)` always yields the
/// same frames.
pub fn synth_clip(params: &SynthParams, seed: u64) -> Result<VideoClip> {
    if params.frames == 0 || params.width == 0 || params.height == 0 {
        return Err(Error::InvalidParameter("empty synthetic clip".into()));
    }
    if !(params.min_speed > 0.0 && params.max_speed >= params.min_speed) {
        return Err(Error::InvalidParameter("need 0 < min_speed <= max_speed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speed = rng.random_range(params.min_speed..=params.max_speed);
    let wobble_amp = 1.5;
    let wobble_period = rng.random_range(30.0..60.0);
    let vert_amp = rng.random_range(0.0..4.0);
    let margin = 8.0;

    // effective time stands still inside static segments
    let mut clock = Vec::with_capacity(params.frames);
    let mut t = 0.0;
    for f in 0..params.frames {
        clock.push(t);
        let frozen = params
            .static_segments
            .iter()
            .any(|&(s, l)| f >= s && f + 1 < s + l);
        if !frozen {
            t += 1.0;
        }
    }

    let (w, h) = (params.width as usize, params.height as usize);
    let tex_w = w + (speed * params.frames as f64).ceil() as usize + 2 * margin as usize + 4;
    let tex_h = h + 2 * margin as usize + 4;
    let channels = params.channels as usize;
    let layers: Vec<Texture> = (0..channels.min(2))
        .map(|_| Texture::value_noise(tex_w, tex_h, &mut rng))
        .collect();
    let blobs: Vec<Blob> = (0..params.blobs)
        .map(|_| Blob {
            x: rng.random_range(0.0..w as f64),
            y: rng.random_range(0.0..h as f64),
            vx: rng.random_range(-1.5..1.5),
            vy: rng.random_range(-1.0..1.0),
            radius: rng.random_range(3.0..8.0),
            level: rng.random_range(0.0..1.0),
        })
        .collect();
    let noise = Normal::new(0.0, params.sensor_noise.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut frames = Vec::with_capacity(params.frames);
    for &tc in &clock {
        let cam_x = margin + speed * tc + wobble_amp * (std::f64::consts::TAU * tc / wobble_period).sin();
        let cam_y = margin + vert_amp * (std::f64::consts::TAU * tc / 97.0).sin();
        let mut data = Vec::with_capacity(w * h * channels);
        for row in 0..h {
            for col in 0..w {
                let (x, y) = (cam_x + col as f64, cam_y + row as f64);
                let base = layers[0].sample(x, y);
                let mut px = [base; 3];
                if channels == 3 {
                    let second = layers[1].sample(x, y);
                    px = [base, 0.7 * base + 0.3 * second, 0.8 * base + 0.2 * (1.0 - second)];
                }
                for b in &blobs {
                    let bx = (b.x + b.vx * tc).rem_euclid(w as f64);
                    let by = (b.y + b.vy * tc).rem_euclid(h as f64);
                    let d2 = (col as f64 - bx).powi(2) + (row as f64 - by).powi(2);
                    let alpha = (-(d2 / (b.radius * b.radius))).exp();
                    for v in px.iter_mut() {
                        *v = *v * (1.0 - alpha) + b.level * alpha;
                    }
                }
                for v in &px[..channels] {
                    let mut s = v * 255.0;
                    if params.sensor_noise > 0.0 {
                        s += noise.sample(&mut rng);
                    }
                    data.push(s.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        frames.push(FrameBuffer::new(params.width, params.height, params.channels, data)?);
    }
    VideoClip::new(frames, params.fps, format!("synth-{seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(frames: usize) -> SynthParams {
        SynthParams {
            width: 24,
            height: 16,
            frames,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_clip(&small(10), 3).unwrap();
        assert_eq!(a, synth_clip(&small(10), 3).unwrap());
        assert_ne!(a, synth_clip(&small(10), 4).unwrap());
        assert_eq!(a.shape(), (24, 16, 3));
    }

    #[test]
    fn frames_change_over_time() {
        let c = synth_clip(&small(20), 1).unwrap();
        assert!(c.frames().windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn static_segment_freezes_content() {
        let p = SynthParams {
            static_segments: vec![(5, 6)],
            ..small(20)
        };
        let c = synth_clip(&p, 9).unwrap();
        for t in 5..10 {
            assert_eq!(c.frame(t), c.frame(t + 1));
        }
        assert_ne!(c.frame(4), c.frame(5));
        assert_ne!(c.frame(10), c.frame(11));
    }

    #[test]
    fn gray_output() {
        let p = SynthParams {
            channels: 1,
            ..small(3)
        };
        assert_eq!(synth_clip(&p, 0).unwrap().shape(), (24, 16, 1));
    }
}
