//! Network extraction from raster maps: georeference by control points,
//! mask the network color, thin the mask to a skeleton and trace it into
//! polylines.
//!
//! Pixel coordinates `(col, row)` address pixel centers, with `(0, 0)` the
//! top-left pixel.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GeoPolyline, PlanePoint, Projection};

/// Default color tolerance (max-channel difference).
pub const DEFAULT_COLOR_TOLERANCE: u8 = 30;

/// Largest supported dilation radius, pixels.
pub const MAX_DILATION: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterMap {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RasterMap {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry("raster must be at least 1x1".into()));
        }
        if width.checked_mul(height) != Some(pixels.len()) {
            return Err(Error::Geometry(format!(
                "raster {width}x{height} needs {} pixels, got {}",
                width.saturating_mul(height),
                pixels.len()
            )));
        }
        Ok(RasterMap { width, height, pixels })
    }

    /// A raster filled with one color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width.saturating_mul(height)])
    }

    /// Decodes an 8-bit PNG; alpha is discarded.
    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
            .map_err(|e| Error::parse("raster", "png", e.to_string()))?
            .to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let pixels = img.pixels().map(|p| p.0).collect();
        Self::new(w, h, pixels)
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let img = image::RgbImage::from_raw(self.width as u32, self.height as u32, flat)
            .ok_or_else(|| Error::Geometry("raster too large for png".into()))?;
        let mut out = std::io::Cursor::new(Vec::new());
        img.write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| Error::Geometry(format!("png encoding failed: {e}")))?;
        Ok(out.into_inner())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, rgb: [u8; 3]) {
        self.pixels[row * self.width + col] = rgb;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPoint {
    pub col: f64,
    pub row: f64,
    pub geo: GeoPoint,
}

/// `x = a·col + b·row + c`, `y = d·col + e·row + f`, in projected meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineTransform {
    pub fn apply(&self, col: f64, row: f64) -> PlanePoint {
        PlanePoint::new(
            self.a * col + self.b * row + self.c,
            self.d * col + self.e * row + self.f,
        )
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    /// Mean length of one pixel step in meters.
    pub fn pixel_size(&self) -> f64 {
        (self.determinant().abs()).sqrt()
    }
}

/// Solves a 3×3 system by Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let k = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (x, p) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= k * p;
            }
            r[row] -= k * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

/// Least-squares affine fit from pixel to projected coordinates.
pub fn fit_affine(points: &[ControlPoint], proj: &Projection) -> Result<AffineTransform> {
    if points.len() < 3 {
        return Err(Error::Geometry(format!(
            "affine fit needs at least 3 control points, got {}",
            points.len()
        )));
    }
    for p in points {
        p.geo.validate()?;
    }
    // Center pixel coordinates for conditioning.
    let n = points.len() as f64;
    let mc = points.iter().map(|p| p.col).sum::<f64>() / n;
    let mr = points.iter().map(|p| p.row).sum::<f64>() / n;
    let (mut scc, mut scr, mut srr) = (0.0, 0.0, 0.0);
    for p in points {
        let (c, r) = (p.col - mc, p.row - mr);
        scc += c * c;
        scr += c * r;
        srr += r * r;
    }
    let det = scc * srr - scr * scr;
    if !(det > 1e-12 * (scc + srr).powi(2)) || scc + srr == 0.0 {
        return Err(Error::Geometry("control points are collinear in pixel space".into()));
    }
    let plane: Vec<PlanePoint> = points.iter().map(|p| proj.project(p.geo)).collect();
    let mut ata = [[0.0; 3]; 3];
    let (mut atx, mut aty) = ([0.0; 3], [0.0; 3]);
    for (p, q) in points.iter().zip(&plane) {
        let row = [p.col - mc, p.row - mr, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atx[i] += row[i] * q.x;
            aty[i] += row[i] * q.y;
        }
    }
    let sx = solve3(ata, atx).ok_or_else(|| Error::Geometry("singular control point system".into()))?;
    let sy = solve3(ata, aty).ok_or_else(|| Error::Geometry("singular control point system".into()))?;
    let t = AffineTransform {
        a: sx[0],
        b: sx[1],
        c: sx[2] - sx[0] * mc - sx[1] * mr,
        d: sy[0],
        e: sy[1],
        f: sy[2] - sy[0] * mc - sy[1] * mr,
    };
    if t.determinant() == 0.0 || !t.determinant().is_finite() {
        return Err(Error::Geometry("degenerate georeference (zero determinant)".into()));
    }
    Ok(t)
}

/// Binary raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

const RING: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    /// Out-of-bounds reads are background.
    pub fn at(&self, col: isize, row: isize) -> bool {
        col >= 0
            && row >= 0
            && (col as usize) < self.width
            && (row as usize) < self.height
            && self.bits[row as usize * self.width + col as usize]
    }

    pub fn set(&mut self, col: usize, row: usize, v: bool) {
        self.bits[row * self.width + col] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    /// Whether every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.width == other.width && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// The 8 neighbors clockwise from north.
    fn ring(&self, col: usize, row: usize) -> [bool; 8] {
        let (c, r) = (col as isize, row as isize);
        RING.map(|(dc, dr)| self.at(c + dc, r + dr))
    }

    /// Component label per pixel (8-connectivity) and the component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        const NONE: usize = usize::MAX;
        let mut label = vec![NONE; self.bits.len()];
        let mut n = 0;
        let mut stack = Vec::new();
        for start in 0..self.bits.len() {
            if !self.bits[start] || label[start] != NONE {
                continue;
            }
            label[start] = n;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (c, r) = ((i % self.width) as isize, (i / self.width) as isize);
                for (dc, dr) in RING {
                    if self.at(c + dc, r + dr) {
                        let j = (r + dr) as usize * self.width + (c + dc) as usize;
                        if label[j] == NONE {
                            label[j] = n;
                            stack.push(j);
                        }
                    }
                }
            }
            n += 1;
        }
        (label, n)
    }

    pub fn component_count(&self) -> usize {
        self.components().1
    }
}

/// Pixels whose largest channel difference from `target` is at most `tolerance`.
pub fn color_mask(raster: &RasterMap, target: [u8; 3], tolerance: u8) -> Mask {
    let mut m = Mask::new(raster.width, raster.height);
    for (i, px) in raster.pixels.iter().enumerate() {
        let dist = (0..3).map(|k| px[k].abs_diff(target[k])).max().unwrap_or(0);
        m.bits[i] = dist <= tolerance;
    }
    m
}

/// Square-element dilation; closes gaps up to `2·radius` pixels.
pub fn dilate(mask: &Mask, radius: u8) -> Result<Mask> {
    if radius > MAX_DILATION {
        return Err(Error::Config(format!(
            "dilation radius {radius} exceeds {MAX_DILATION}"
        )));
    }
    let r = radius as isize;
    let mut out = mask.clone();
    for (c, rw) in mask.pixels() {
        for dr in -r..=r {
            for dc in -r..=r {
                let (cc, rr) = (c as isize + dc, rw as isize + dr);
                if cc >= 0 && rr >= 0 && (cc as usize) < mask.width && (rr as usize) < mask.height {
                    out.set(cc as usize, rr as usize, true);
                }
            }
        }
    }
    Ok(out)
}

/// Number of 0→1 transitions around the ring.
fn transitions(ring: &[bool; 8]) -> usize {
    (0..8).filter(|&i| !ring[i] && ring[(i + 1) % 8]).count()
}

/// Zhang–Suen deletion test for one sub-iteration.
fn zs_deletable(m: &Mask, col: usize, row: usize, first: bool) -> bool {
    let p = m.ring(col, row);
    let b = p.iter().filter(|&&x| x).count();
    if !(2..=6).contains(&b) || transitions(&p) != 1 {
        return false;
    }
    // p[0]=N, p[2]=E, p[4]=S, p[6]=W
    let (n, e, s, w) = (p[0], p[2], p[4], p[6]);
    if first {
        !(n && e && s) && !(e && s && w)
    } else {
        !(n && e && w) && !(n && s && w)
    }
}

/// Whether the set neighbors of a pixel form a single 8-connected group
/// within the ring, so removing the pixel cannot split anything locally.
fn is_simple(m: &Mask, col: usize, row: usize) -> bool {
    let p = m.ring(col, row);
    let set: Vec<usize> = (0..8).filter(|&i| p[i]).collect();
    if set.len() < 2 {
        return false;
    }
    // Ring positions are adjacent when consecutive; the 4-neighbors (even
    // indices) also touch across a corner position.
    let adjacent = |i: usize, j: usize| {
        let d = (i + 8 - j) % 8;
        d == 1 || d == 7 || (i.is_multiple_of(2) && j.is_multiple_of(2) && (d == 2 || d == 6))
    };
    let mut seen = vec![set[0]];
    let mut stack = vec![set[0]];
    while let Some(i) = stack.pop() {
        for &j in &set {
            if !seen.contains(&j) && adjacent(i, j) {
                seen.push(j);
                stack.push(j);
            }
        }
    }
    seen.len() == set.len()
}

/// Zhang–Suen thinning to a fixpoint, followed by removal of staircase
/// corner pixels. A sub-iteration that would erase or split a component is
/// replayed sequentially with a simple-point check, so the 8-connected
/// component count never changes.
pub fn thin(mask: &Mask) -> Mask {
    let mut m = mask.clone();
    let target = m.component_count();
    loop {
        let mut changed = false;
        for first in [true, false] {
            let cands: Vec<(usize, usize)> = m.pixels().filter(|&(c, r)| zs_deletable(&m, c, r, first)).collect();
            if cands.is_empty() {
                continue;
            }
            let mut trial = m.clone();
            for &(c, r) in &cands {
                trial.set(c, r, false);
            }
            if trial.component_count() == target {
                m = trial;
                changed = true;
            } else {
                for &(c, r) in &cands {
                    if zs_deletable(&m, c, r, first) && is_simple(&m, c, r) {
                        m.set(c, r, false);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Staircase cleanup: a pixel with two orthogonal 4-neighbors that touch
    // each other diagonally is redundant.
    let coords: Vec<(usize, usize)> = m.pixels().collect();
    for (c, r) in coords {
        let p = m.ring(c, r);
        let corner = (p[0] && p[2]) || (p[2] && p[4]) || (p[4] && p[6]) || (p[6] && p[0]);
        if corner && is_simple(&m, c, r) {
            m.set(c, r, false);
        }
    }
    m
}

/// Neighbors under mixed adjacency: all 4-neighbors, plus diagonal neighbors
/// not already reachable through a shared 4-neighbor. This yields the same
/// components as 8-adjacency without the redundant diagonal links at corners
/// and junctions.
fn m_neighbors(m: &Mask, col: usize, row: usize) -> Vec<(usize, usize)> {
    let (c, r) = (col as isize, row as isize);
    RING.iter()
        .filter(|&&(dc, dr)| m.at(c + dc, r + dr) && (dc == 0 || dr == 0 || (!m.at(c + dc, r) && !m.at(c, r + dr))))
        .map(|&(dc, dr)| ((c + dc) as usize, (r + dr) as usize))
        .collect()
}

/// Traces a thinned skeleton into pixel polylines.
///
/// Nodes are pixels with other than two neighbors under mixed adjacency.
/// Polylines run between nodes, and junction pixels are shared endpoints of
/// the branches meeting there; every other pixel lies on exactly one
/// polyline. Closed loops without nodes come out as rings starting and
/// ending at their first row-major pixel. Isolated pixels are dropped.
/// Start order is row-major, so the output is deterministic.
pub fn trace(skel: &Mask) -> Vec<Vec<(usize, usize)>> {
    let w = skel.width;
    let idx = |(c, r): (usize, usize)| r * w + c;
    let adj: HashMap<usize, Vec<(usize, usize)>> =
        skel.pixels().map(|p| (idx(p), m_neighbors(skel, p.0, p.1))).collect();
    let is_node = |p: (usize, usize)| adj[&idx(p)].len() != 2;

    let mut visited = vec![false; skel.bits.len()];
    let mut direct: BTreeSet<((usize, usize), (usize, usize))> = BTreeSet::new();
    let mut out = Vec::new();

    for start in skel.pixels() {
        if !is_node(start) {
            continue;
        }
        for &first in &adj[&idx(start)] {
            if is_node(first) {
                let key = (start.min(first), start.max(first));
                if direct.insert(key) {
                    out.push(vec![key.0, key.1]);
                }
                continue;
            }
            if visited[idx(first)] {
                continue;
            }
            let mut path = vec![start];
            let (mut prev, mut cur) = (start, first);
            loop {
                if is_node(cur) {
                    path.push(cur);
                    break;
                }
                visited[idx(cur)] = true;
                path.push(cur);
                let next = adj[&idx(cur)].iter().copied().find(|&q| q != prev);
                match next {
                    Some(q) if is_node(q) || !visited[idx(q)] => {
                        prev = cur;
                        cur = q;
                    }
                    _ => break,
                }
            }
            out.push(path);
        }
    }

    // Node-free loops.
    for start in skel.pixels() {
        if visited[idx(start)] || is_node(start) {
            continue;
        }
        let mut path = vec![start];
        visited[idx(start)] = true;
        let mut cur = start;
        while let Some(q) = adj[&idx(cur)].iter().copied().find(|&q| !visited[idx(q)]) {
            visited[idx(q)] = true;
            path.push(q);
            cur = q;
        }
        path.push(start);
        out.push(path);
    }
    out
}

/// Douglas–Peucker simplification of a point sequence.
fn douglas_peucker(pts: &[PlanePoint], tol: f64) -> Vec<PlanePoint> {
    if pts.len() <= 2 || tol <= 0.0 {
        return pts.to_vec();
    }
    let mut keep = vec![false; pts.len()];
    keep[0] = true;
    keep[pts.len() - 1] = true;
    let mut stack = vec![(0, pts.len() - 1)];
    while let Some((i, j)) = stack.pop() {
        if j <= i + 1 {
            continue;
        }
        let (a, b) = (pts[i], pts[j]);
        let mut best = (0.0, i);
        for (k, p) in pts.iter().enumerate().take(j).skip(i + 1) {
            let d = match crate::geo::point_segment_distance(*p, a, b) {
                Ok((d, _)) => d,
                Err(_) => p.dist(&a),
            };
            if d > best.0 {
                best = (d, k);
            }
        }
        if best.0 > tol {
            keep[best.1] = true;
            stack.push((i, best.1));
            stack.push((best.1, j));
        }
    }
    pts.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub rgb: [u8; 3],
    pub tolerance: u8,
    /// Dilation radius in pixels, 0 to 2.
    pub dilation: u8,
    /// Douglas–Peucker tolerance in pixels; 0 keeps every skeleton pixel.
    pub simplify_px: f64,
}

impl ExtractOptions {
    pub fn new(rgb: [u8; 3]) -> Self {
        ExtractOptions {
            rgb,
            tolerance: DEFAULT_COLOR_TOLERANCE,
            dilation: 0,
            simplify_px: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub polylines: Vec<GeoPolyline>,
    pub transform: AffineTransform,
    pub mask_pixels: usize,
    pub skeleton_pixels: usize,
    /// Disconnected pieces of the masked network.
    pub components: usize,
}

/// Full raster-to-polyline extraction.
pub fn extract_network(
    raster: &RasterMap,
    control_points: &[ControlPoint],
    opts: &ExtractOptions,
    proj: &Projection,
) -> Result<Extraction> {
    for (i, cp) in control_points.iter().enumerate() {
        let inside = cp.col >= -0.5
            && cp.row >= -0.5
            && cp.col <= raster.width as f64 - 0.5
            && cp.row <= raster.height as f64 - 0.5;
        if !inside {
            return Err(Error::Geometry(format!(
                "control point {i} at pixel ({}, {}) lies outside the {}x{} raster",
                cp.col, cp.row, raster.width, raster.height
            )));
        }
    }
    if !(opts.simplify_px >= 0.0 && opts.simplify_px.is_finite()) {
        return Err(Error::Config("simplification tolerance must be non-negative".into()));
    }
    let t = fit_affine(control_points, proj)?;
    let mask = dilate(&color_mask(raster, opts.rgb, opts.tolerance), opts.dilation)?;
    let skel = thin(&mask);
    let tol_m = opts.simplify_px * t.pixel_size();
    let polylines = trace(&skel)
        .into_iter()
        .map(|path| {
            let plane: Vec<PlanePoint> = path.iter().map(|&(c, r)| t.apply(c as f64, r as f64)).collect();
            GeoPolyline {
                points: douglas_peucker(&plane, tol_m)
                    .into_iter()
                    .map(|p| proj.unproject(p))
                    .collect(),
            }
        })
        .collect();
    Ok(Extraction {
        polylines,
        transform: t,
        mask_pixels: mask.count(),
        skeleton_pixels: skel.count(),
        components: mask.component_count(),
    })
}
