use crate::error::{QbmError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum CellShape {
    Rectangle {
        q1: f64,
        q2: f64,
        p1: f64,
        p2: f64,
    },
    /// Counter-clockwise simple polygon in (q, p).
    Polygon(Vec<(f64, f64)>),
}

/// A region of phase space together with the reference length `L` and
/// momentum `P` that set its quantum-scale ratio `hbar / (L P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceCell {
    shape: CellShape,
    l_scale: f64,
    p_scale: f64,
}

impl PhaseSpaceCell {
    pub fn rectangle(q1: f64, q2: f64, p1: f64, p2: f64) -> Result<Self> {
        if !(q1 < q2) || !(p1 < p2) || ![q1, q2, p1, p2].iter().all(|v| v.is_finite()) {
            return Err(QbmError::InvalidParameter(format!(
                "rectangle needs q1 < q2 and p1 < p2, got [{q1}, {q2}] x [{p1}, {p2}]"
            )));
        }
        Ok(PhaseSpaceCell { shape: CellShape::Rectangle { q1, q2, p1, p2 }, l_scale: q2 - q1, p_scale: p2 - p1 })
    }

    /// Simple polygon. Orientation is normalised to counter-clockwise; the
    /// reference scales default to the bounding-box extents.
    pub fn polygon(mut vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(QbmError::InvalidParameter("polygon needs at least 3 vertices".into()));
        }
        if !vertices.iter().all(|(q, p)| q.is_finite() && p.is_finite()) {
            return Err(QbmError::InvalidParameter("non-finite polygon vertex".into()));
        }
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(QbmError::InvalidParameter("polygon has zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        if !is_simple(&vertices) {
            return Err(QbmError::InvalidParameter("polygon is self-intersecting".into()));
        }
        let (q1, q2, p1, p2) = bbox(&vertices);
        Ok(PhaseSpaceCell { shape: CellShape::Polygon(vertices), l_scale: q2 - q1, p_scale: p2 - p1 })
    }

    pub fn with_scales(mut self, l_scale: f64, p_scale: f64) -> Result<Self> {
        if !(l_scale > 0.0) || !(p_scale > 0.0) {
            return Err(QbmError::InvalidParameter("cell scales must be positive".into()));
        }
        self.l_scale = l_scale;
        self.p_scale = p_scale;
        Ok(self)
    }

    pub fn shape(&self) -> &CellShape {
        &self.shape
    }

    pub fn is_rectangle(&self) -> bool {
        matches!(self.shape, CellShape::Rectangle { .. })
    }

    pub fn l_scale(&self) -> f64 {
        self.l_scale
    }

    pub fn p_scale(&self) -> f64 {
        self.p_scale
    }

    /// `L * P`.
    pub fn scale_product(&self) -> f64 {
        self.l_scale * self.p_scale
    }

    /// Phase-space volume `[Gamma]`.
    pub fn volume(&self) -> f64 {
        match &self.shape {
            CellShape::Rectangle { q1, q2, p1, p2 } => (q2 - q1) * (p2 - p1),
            CellShape::Polygon(v) => signed_area(v),
        }
    }

    /// Counter-clockwise vertex list.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        match &self.shape {
            CellShape::Rectangle { q1, q2, p1, p2 } => {
                vec![(*q1, *p1), (*q2, *p1), (*q2, *p2), (*q1, *p2)]
            }
            CellShape::Polygon(v) => v.clone(),
        }
    }

    /// `(q_min, q_max, p_min, p_max)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match &self.shape {
            CellShape::Rectangle { q1, q2, p1, p2 } => (*q1, *q2, *p1, *p2),
            CellShape::Polygon(v) => bbox(v),
        }
    }

    pub fn centroid(&self) -> (f64, f64) {
        match &self.shape {
            CellShape::Rectangle { q1, q2, p1, p2 } => (0.5 * (q1 + q2), 0.5 * (p1 + p2)),
            CellShape::Polygon(v) => {
                let a = signed_area(v);
                let (mut cq, mut cp) = (0.0, 0.0);
                for i in 0..v.len() {
                    let (x0, y0) = v[i];
                    let (x1, y1) = v[(i + 1) % v.len()];
                    let cross = x0 * y1 - x1 * y0;
                    cq += (x0 + x1) * cross;
                    cp += (y0 + y1) * cross;
                }
                (cq / (6.0 * a), cp / (6.0 * a))
            }
        }
    }

    pub fn contains(&self, q: f64, p: f64) -> bool {
        match &self.shape {
            CellShape::Rectangle { q1, q2, p1, p2 } => q >= *q1 && q <= *q2 && p >= *p1 && p <= *p2,
            CellShape::Polygon(v) => {
                let mut inside = false;
                let n = v.len();
                let mut j = n - 1;
                for i in 0..n {
                    let (qi, pi) = v[i];
                    let (qj, pj) = v[j];
                    if (pi > p) != (pj > p) && q < (qj - qi) * (p - pi) / (pj - pi) + qi {
                        inside = !inside;
                    }
                    j = i;
                }
                inside
            }
        }
    }

    /// Rejects cells whose `L P` is below `hbar`.
    pub fn check_quantum_scale(&self, hbar: f64) -> Result<()> {
        let lp = self.scale_product();
        if lp < hbar {
            return Err(QbmError::BelowQuantumScale { lp, hbar });
        }
        Ok(())
    }

    /// Intersection of two rectangles; `Ok(None)` when they do not overlap.
    pub fn intersect(&self, other: &PhaseSpaceCell) -> Result<Option<PhaseSpaceCell>> {
        match (&self.shape, &other.shape) {
            (
                CellShape::Rectangle { q1: a1, q2: a2, p1: b1, p2: b2 },
                CellShape::Rectangle { q1: c1, q2: c2, p1: d1, p2: d2 },
            ) => {
                let q1 = a1.max(*c1);
                let q2 = a2.min(*c2);
                let p1 = b1.max(*d1);
                let p2 = b2.min(*d2);
                if q1 < q2 && p1 < p2 {
                    Ok(Some(PhaseSpaceCell::rectangle(q1, q2, p1, p2)?))
                } else {
                    Ok(None)
                }
            }
            _ => Err(QbmError::Misuse("cell intersection is only implemented for rectangles".into())),
        }
    }

    /// Rigid translation; scales are kept.
    pub fn translated(&self, dq: f64, dp: f64) -> PhaseSpaceCell {
        let shape = match &self.shape {
            CellShape::Rectangle { q1, q2, p1, p2 } => {
                CellShape::Rectangle { q1: q1 + dq, q2: q2 + dq, p1: p1 + dp, p2: p2 + dp }
            }
            CellShape::Polygon(v) => CellShape::Polygon(v.iter().map(|(q, p)| (q + dq, p + dp)).collect()),
        };
        PhaseSpaceCell { shape, ..*self }
    }

    /// Rotation about the centroid in the (q, p) plane; scales are kept.
    pub fn rotated(&self, angle: f64) -> PhaseSpaceCell {
        let (cq, cp) = self.centroid();
        let (sn, cs) = angle.sin_cos();
        let v = self
            .vertices()
            .into_iter()
            .map(|(q, p)| {
                let (dq, dp) = (q - cq, p - cp);
                (cq + cs * dq - sn * dp, cp + sn * dq + cs * dp)
            })
            .collect();
        PhaseSpaceCell { shape: CellShape::Polygon(v), ..*self }
    }

    /// Polygon version of this cell with the given vertices and the original
    /// reference scales. Used for transported cells.
    pub fn reshaped(&self, vertices: Vec<(f64, f64)>) -> Result<PhaseSpaceCell> {
        let c = PhaseSpaceCell::polygon(vertices)?;
        c.with_scales(self.l_scale, self.p_scale)
    }

    /// At least `min_points` points on the boundary, distributed by arc
    /// length, always including every vertex.
    pub fn boundary_samples(&self, min_points: usize) -> Vec<(f64, f64)> {
        let v = self.vertices();
        let n = v.len();
        let lengths: Vec<f64> = (0..n)
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % n]);
                ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt()
            })
            .collect();
        let perimeter: f64 = lengths.iter().sum();
        let mut out = Vec::with_capacity(min_points + n);
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let k = ((lengths[i] / perimeter) * min_points as f64).ceil().max(1.0) as usize;
            for j in 0..k {
                let t = j as f64 / k as f64;
                out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
            }
        }
        out
    }

    /// Ordered q-coordinates of all vertices; between consecutive values the
    /// vertical cross-section of the cell varies linearly.
    pub fn q_breakpoints(&self) -> Vec<f64> {
        let mut qs: Vec<f64> = self.vertices().iter().map(|v| v.0).collect();
        qs.sort_by(|a, b| a.total_cmp(b));
        qs.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        qs
    }

    /// Momentum intervals where the vertical line at `q` lies inside the cell.
    pub fn p_intervals(&self, q: f64) -> Vec<(f64, f64)> {
        match &self.shape {
            CellShape::Rectangle { q1, q2, p1, p2 } => {
                if q >= *q1 && q <= *q2 {
                    vec![(*p1, *p2)]
                } else {
                    Vec::new()
                }
            }
            CellShape::Polygon(v) => {
                let n = v.len();
                let mut hits = Vec::new();
                for i in 0..n {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    let crosses = (a.0 <= q && q < b.0) || (b.0 <= q && q < a.0);
                    if crosses {
                        hits.push(a.1 + (q - a.0) * (b.1 - a.1) / (b.0 - a.0));
                    }
                }
                hits.sort_by(|x, y| x.total_cmp(y));
                hits.chunks_exact(2).map(|c| (c[0], c[1])).collect()
            }
        }
    }
}

fn bbox(v: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |(a, b, c, d), &(q, p)| {
        (a.min(q), b.max(q), c.min(p), d.max(p))
    })
}

/// Shoelace formula; positive for counter-clockwise order.
pub(crate) fn signed_area(v: &[(f64, f64)]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let (x0, y0) = v[i];
        let (x1, y1) = v[(i + 1) % n];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Checks that no two non-adjacent edges meet. Quadratic in the vertex count,
/// with a bounding-box prefilter.
pub(crate) fn is_simple(v: &[(f64, f64)]) -> bool {
    let n = v.len();
    if n < 4 {
        return signed_area(v) != 0.0;
    }
    let boxes: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            (a.0.min(b.0), a.0.max(b.0), a.1.min(b.1), a.1.max(b.1))
        })
        .collect();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (bi, bj) = (boxes[i], boxes[j]);
            if bi.1 < bj.0 || bj.1 < bi.0 || bi.3 < bj.2 || bj.3 < bi.2 {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}
