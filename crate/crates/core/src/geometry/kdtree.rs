use super::cloud::is_finite;
use super::{Point3, PointCloud};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Exact nearest-neighbour index (kd-tree) over a fixed set of points.
///
/// Queries return the true minimum Euclidean distance; ties go to the lowest
/// point index. The index is immutable and can be queried from many threads.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Builds an index over every point of `cloud`.
pub fn build_index(cloud: &PointCloud) -> Result<NeighborIndex> {
    NeighborIndex::new(cloud.points())
}

impl NeighborIndex {
    pub fn new(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(index) = points.iter().position(|p| !is_finite(p)) {
            return Err(Error::NonFiniteCoordinate { index });
        }
        let mut index = NeighborIndex {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        index.build(0, points.len());
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Point3 {
        &self.points[i]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.order[mid]][axis];
        // Placeholder, patched once both children exist.
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let first = self.points[self.order[start]];
        let (lo, hi) = self.order[start..end]
            .iter()
            .fold((first, first), |(lo, hi), &i| {
                (lo.inf(&self.points[i]), hi.sup(&self.points[i]))
            });
        (hi - lo).imax()
    }

    /// Nearest indexed point to `query` as `(point_index, distance_mm)`.
    pub fn nearest(&self, query: &Point3) -> Result<(usize, f64)> {
        if !is_finite(query) {
            return Err(Error::InvalidQuery);
        }
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, query, &mut best);
        Ok((best.1, best.0.sqrt()))
    }

    fn search(&self, node: usize, q: &Point3, best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (q - self.points[i]).norm_squared();
                    if d2 < best.0 || (d2 == best.0 && i < best.1) {
                        *best = (d2, i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // `<=` keeps equal-distance candidates reachable for the tie rule.
                if diff * diff <= best.0 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

/// Free-function form of [`NeighborIndex::nearest`].
pub fn nearest(index: &NeighborIndex, query: &Point3) -> Result<(usize, f64)> {
    index.nearest(query)
}
