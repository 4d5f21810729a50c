//! Seeded procedural tracks: straights and constant-curvature arcs.

use crate::rng::Rng;

pub const LANE_HALF_WIDTH: f32 = 2.0;
pub const MIN_CURVATURE: f32 = 0.02;
pub const MAX_CURVATURE: f32 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Straight,
    Arc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Meters along the centerline.
    pub length: f32,
    /// Signed curvature in 1/m; positive bends left, zero for straights.
    pub curvature: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub segments: Vec<Segment>,
    pub lane_half_width: f32,
}

/// Deterministic track from a seed: an entry straight, two to four arcs
/// with alternating turn directions separated by straights, and a long exit
/// straight. Curvature magnitudes stay in [MIN_CURVATURE, MAX_CURVATURE],
/// which keeps |curvature| * lane_half_width well under the
/// self-intersection bound of 0.5.
pub fn build_track(seed: u64) -> Track {
    let mut rng = Rng::new(seed).fork(0x7261_636b); // track stream
    let mut segments = Vec::new();
    segments.push(Segment {
        kind: SegmentKind::Straight,
        length: rng.range_f32(40.0, 60.0),
        curvature: 0.0,
    });
    let n_arcs = 2 + rng.below(3);
    let mut sign = if rng.next_f32() < 0.5 { 1.0 } else { -1.0 };
    for i in 0..n_arcs {
        let magnitude = rng.range_f32(MIN_CURVATURE, MAX_CURVATURE).min(MAX_CURVATURE);
        let angle = rng.range_f32(0.7, 1.6);
        segments.push(Segment {
            kind: SegmentKind::Arc,
            length: (angle / magnitude).clamp(20.0, 80.0),
            curvature: sign * magnitude,
        });
        sign = -sign;
        let straight_len = if i + 1 == n_arcs {
            80.0
        } else {
            rng.range_f32(30.0, 60.0)
        };
        segments.push(Segment {
            kind: SegmentKind::Straight,
            length: straight_len,
            curvature: 0.0,
        });
    }
    Track {
        segments,
        lane_half_width: LANE_HALF_WIDTH,
    }
}

impl Track {
    pub fn total_length(&self) -> f32 {
        self.segments.iter().map(|seg| seg.length).sum()
    }

    /// Curvature at arclength `s`; zero beyond either end.
    pub fn curvature_at(&self, s: f32) -> f32 {
        if s < 0.0 {
            return 0.0;
        }
        let mut acc = 0.0f32;
        for seg in &self.segments {
            if s < acc + seg.length {
                return seg.curvature;
            }
            acc += seg.length;
        }
        0.0
    }

    /// Arclength where the first arc segment begins, if any.
    pub fn first_arc_start(&self) -> Option<f32> {
        let mut acc = 0.0f32;
        for seg in &self.segments {
            if seg.kind == SegmentKind::Arc {
                return Some(acc);
            }
            acc += seg.length;
        }
        None
    }

    /// Position of the centerline point at arclength `s + dist`, expressed
    /// in the tangent frame at arclength `s`: (forward, lateral-left).
    pub fn centerline_offset(&self, s: f32, dist: f32) -> (f32, f32) {
        let profile = self.centerline_profile(s, dist, 0.25);
        profile.offset_at(dist)
    }

    /// Integrates the centerline ahead of `s` on a fixed grid so renderers
    /// can look up many distances cheaply.
    pub fn centerline_profile(&self, s: f32, max_dist: f32, step: f32) -> CenterlineProfile {
        assert!(step > 0.0 && max_dist >= 0.0);
        let n = (max_dist / step).ceil() as usize + 1;
        let mut xs = Vec::with_capacity(n + 1);
        let mut ys = Vec::with_capacity(n + 1);
        let mut x = 0.0f32;
        let mut y = 0.0f32;
        let mut theta = 0.0f32;
        xs.push(x);
        ys.push(y);
        for i in 0..n {
            let mid = s + (i as f32 + 0.5) * step;
            let theta_mid = theta + self.curvature_at(mid) * step * 0.5;
            x += theta_mid.cos() * step;
            y += theta_mid.sin() * step;
            theta += self.curvature_at(mid) * step;
            xs.push(x);
            ys.push(y);
        }
        CenterlineProfile { step, xs, ys }
    }
}

/// Precomputed centerline positions ahead of a reference arclength.
pub struct CenterlineProfile {
    step: f32,
    xs: Vec<f32>,
    ys: Vec<f32>,
}

impl CenterlineProfile {
    /// (forward, lateral) of the centerline point `dist` meters of
    /// arclength ahead, linearly interpolated on the grid.
    pub fn offset_at(&self, dist: f32) -> (f32, f32) {
        let pos = (dist / self.step).max(0.0);
        let i = (pos as usize).min(self.xs.len() - 2);
        let frac = pos - i as f32;
        (
            self.xs[i] + (self.xs[i + 1] - self.xs[i]) * frac,
            self.ys[i] + (self.ys[i + 1] - self.ys[i]) * frac,
        )
    }

    /// Centerline lateral offset as a function of straight-ahead forward
    /// distance x (not arclength), sampled on a regular x grid. Used by the
    /// renderer, which shoots rays in the tangent frame. Once the road
    /// bends past +/-90 degrees the last value is held.
    pub fn lateral_by_forward(&self, x_step: f32, n: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(n);
        let mut j = 0usize;
        let mut last_y = 0.0f32;
        for i in 0..n {
            let target_x = i as f32 * x_step;
            while j + 1 < self.xs.len() && self.xs[j + 1] <= target_x && self.xs[j + 1] > self.xs[j]
            {
                j += 1;
            }
            if j + 1 < self.xs.len() && self.xs[j + 1] > self.xs[j] && target_x >= self.xs[j] {
                let frac = ((target_x - self.xs[j]) / (self.xs[j + 1] - self.xs[j])).clamp(0.0, 1.0);
                last_y = self.ys[j] + (self.ys[j + 1] - self.ys[j]) * frac;
            }
            out.push(last_y);
        }
        out
    }
}
