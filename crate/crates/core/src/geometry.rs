use serde::{Deserialize, Serialize};

/// Circle in pixel coordinates. `cx` is the column, `cy` the row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub fn new(cx: f64, cy: f64, r: f64) -> Self {
        Self { cx, cy, r }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.distance_to_center(x, y) < self.r
    }

    pub fn distance_to_center(&self, x: f64, y: f64) -> f64 {
        (x - self.cx).hypot(y - self.cy)
    }

    pub fn center_distance(&self, other: &Circle) -> f64 {
        self.distance_to_center(other.cx, other.cy)
    }

    pub fn scaled(&self, s: f64) -> Circle {
        Circle::new(self.cx * s, self.cy * s, self.r * s)
    }

    /// Distance from `(ox, oy)` along direction `theta` to this circle's
    /// boundary. `(ox, oy)` must lie inside the circle.
    pub fn ray_exit(&self, ox: f64, oy: f64, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let dx = ox - self.cx;
        let dy = oy - self.cy;
        let b = dx * c + dy * s;
        let q = dx * dx + dy * dy - self.r * self.r;
        -b + (b * b - q).max(0.0).sqrt()
    }
}

/// Line `a·x + b·y = c` with `(a, b)` a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Line {
    pub fn from_normal_angle(theta: f64, rho: f64) -> Self {
        Self {
            a: theta.cos(),
            b: theta.sin(),
            c: rho,
        }
    }

    /// Row coordinate of the line at column `x`, if the line is not vertical.
    pub fn y_at(&self, x: f64) -> Option<f64> {
        if self.b.abs() < 1e-12 {
            None
        } else {
            Some((self.c - self.a * x) / self.b)
        }
    }

    /// Intersection points with a circle.
    pub fn intersect_circle(&self, circle: &Circle) -> Vec<(f64, f64)> {
        let d = self.a * circle.cx + self.b * circle.cy - self.c;
        let norm = self.a.hypot(self.b);
        let dist = d / norm;
        if dist.abs() > circle.r {
            return Vec::new();
        }
        let (ua, ub) = (self.a / norm, self.b / norm);
        let foot = (circle.cx - dist * ua, circle.cy - dist * ub);
        let half = (circle.r * circle.r - dist * dist).sqrt();
        let dir = (-ub, ua);
        vec![
            (foot.0 + half * dir.0, foot.1 + half * dir.1),
            (foot.0 - half * dir.0, foot.1 - half * dir.1),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_exit_concentric() {
        let c = Circle::new(10.0, 10.0, 5.0);
        assert!((c.ray_exit(10.0, 10.0, 1.234) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn ray_exit_offset_center() {
        let c = Circle::new(0.0, 0.0, 10.0);
        assert!((c.ray_exit(3.0, 0.0, 0.0) - 7.0).abs() < 1e-12);
        assert!((c.ray_exit(3.0, 0.0, std::f64::consts::PI) - 13.0).abs() < 1e-12);
    }

    #[test]
    fn horizontal_line_meets_circle() {
        let line = Line::from_normal_angle(std::f64::consts::FRAC_PI_2, 4.0);
        let pts = line.intersect_circle(&Circle::new(0.0, 0.0, 5.0));
        assert_eq!(pts.len(), 2);
        for (x, y) in pts {
            assert!((y - 4.0).abs() < 1e-9);
            assert!((x.abs() - 3.0).abs() < 1e-9);
        }
    }
}
