//! Point processes and a uniform-grid spatial index.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Axis-aligned rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn square(side: f64) -> Self {
        Self { x0: 0.0, y0: 0.0, x1: side, y1: side }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// The window shrunk by `margin` on every side.
    pub fn inset(&self, margin: f64) -> Self {
        Self { x0: self.x0 + margin, y0: self.y0 + margin, x1: self.x1 - margin, y1: self.y1 - margin }
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(
            self.x0 + rng.random::<f64>() * (self.x1 - self.x0),
            self.y0 + rng.random::<f64>() * (self.y1 - self.y0),
        )
    }
}

/// Draws a Poisson count with the given mean; zero mean gives zero.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if !(mean > 0.0) {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as usize).unwrap_or(0)
}

/// Homogeneous PPP of the given density (m^-2) on `window`.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, window: &Window, rng: &mut R) -> Vec<Point> {
    let n = poisson_count(density * window.area(), rng);
    (0..n).map(|_| window.sample_uniform(rng)).collect()
}

/// Bucket grid over a window; cells are stored in CSR form.
#[derive(Debug, Clone, Default)]
pub struct GridIndex {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl GridIndex {
    /// Indexes `ids` (positions into `points`). The cell side is chosen for
    /// about four points per cell.
    pub fn build(window: &Window, points: &[Point], ids: impl Iterator<Item = u32> + Clone) -> Self {
        let count = ids.clone().count().max(1);
        let cell = (4.0 * window.area() / count as f64).sqrt().max(1e-9);
        let nx = (((window.x1 - window.x0) / cell).ceil() as usize).max(1);
        let ny = (((window.y1 - window.y0) / cell).ceil() as usize).max(1);
        let mut g = Self { x0: window.x0, y0: window.y0, cell, nx, ny, starts: vec![0; nx * ny + 1], items: Vec::new() };
        for id in ids.clone() {
            let c = g.cell_of(&points[id as usize]);
            g.starts[c + 1] += 1;
        }
        for i in 0..nx * ny {
            g.starts[i + 1] += g.starts[i];
        }
        let mut fill = g.starts.clone();
        g.items = vec![0; g.starts[nx * ny] as usize];
        for id in ids {
            let c = g.cell_of(&points[id as usize]);
            g.items[fill[c] as usize] = id;
            fill[c] += 1;
        }
        g
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[inline]
    fn coords(&self, p: &Point) -> (usize, usize) {
        // truncation equals floor after clamping at zero
        let cx = ((p.x - self.x0) / self.cell).clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = ((p.y - self.y0) / self.cell).clamp(0.0, (self.ny - 1) as f64) as usize;
        (cx, cy)
    }

    #[inline]
    fn cell_of(&self, p: &Point) -> usize {
        let (cx, cy) = self.coords(p);
        cy * self.nx + cx
    }

    #[inline]
    fn cell_items(&self, cx: usize, cy: usize) -> &[u32] {
        let c = cy * self.nx + cx;
        &self.items[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    /// Nearest indexed point to `p` as `(id, squared distance)`.
    pub fn nearest(&self, points: &[Point], p: &Point) -> Option<(u32, f64)> {
        if self.items.is_empty() {
            return None;
        }
        let (cx, cy) = (self.coords(p).0 as isize, self.coords(p).1 as isize);
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        let mut best: Option<(u32, f64)> = None;
        let scan = |gx: isize, gy: isize, best: &mut Option<(u32, f64)>| {
            if gx < 0 || gy < 0 || gx >= nx || gy >= ny {
                return;
            }
            for &id in self.cell_items(gx as usize, gy as usize) {
                let d2 = points[id as usize].dist2(p);
                if best.map_or(true, |(_, b)| d2 < b) {
                    *best = Some((id, d2));
                }
            }
        };
        for ring in 0..nx.max(ny) {
            if ring == 0 {
                scan(cx, cy, &mut best);
            } else {
                for gx in cx - ring..=cx + ring {
                    scan(gx, cy - ring, &mut best);
                    scan(gx, cy + ring, &mut best);
                }
                for gy in cy - ring + 1..cy + ring {
                    scan(cx - ring, gy, &mut best);
                    scan(cx + ring, gy, &mut best);
                }
            }
            if let Some((_, d2)) = best {
                // distance to the nearest edge of the scanned block that still
                // has cells beyond it
                let mut clear = f64::INFINITY;
                if cx - ring > 0 {
                    clear = clear.min(p.x - (self.x0 + (cx - ring) as f64 * self.cell));
                }
                if cx + ring < nx - 1 {
                    clear = clear.min(self.x0 + (cx + ring + 1) as f64 * self.cell - p.x);
                }
                if cy - ring > 0 {
                    clear = clear.min(p.y - (self.y0 + (cy - ring) as f64 * self.cell));
                }
                if cy + ring < ny - 1 {
                    clear = clear.min(self.y0 + (cy + ring + 1) as f64 * self.cell - p.y);
                }
                if clear == f64::INFINITY || (clear > 0.0 && d2 <= clear * clear) {
                    break;
                }
            }
        }
        best
    }

    /// Calls `f(id, squared distance)` for every indexed point strictly
    /// within `radius` of `p`.
    pub fn for_each_within(&self, points: &[Point], p: &Point, radius: f64, mut f: impl FnMut(u32, f64)) {
        if self.items.is_empty() || !(radius > 0.0) {
            return;
        }
        let r2 = radius * radius;
        let lo = self.coords(&Point::new(p.x - radius, p.y - radius));
        let hi = self.coords(&Point::new(p.x + radius, p.y + radius));
        for gy in lo.1..=hi.1 {
            for gx in lo.0..=hi.0 {
                for &id in self.cell_items(gx, gy) {
                    let d2 = points[id as usize].dist2(p);
                    if d2 < r2 {
                        f(id, d2);
                    }
                }
            }
        }
    }
}
