use super::{from_labeled_parts, BoundaryLabel, GeometryError, Triangulation};

/// Regular 1-to-4 split of every triangle through its edge midpoints.
///
/// Midpoints of boundary edges inherit the endpoint label; all other new
/// vertices are interior. Vertex ids of the input mesh are preserved and edge
/// `e` produces vertex `V + e`.
pub fn refine(t: &Triangulation) -> Result<Triangulation, GeometryError> {
    let nv = t.num_vertices();
    let mut verts = t.vertices().to_vec();
    let mut labels = t.labels().to_vec();
    for e in t.edges() {
        let (a, b) = (t.vertex(e.v[0]), t.vertex(e.v[1]));
        verts.push(a.midpoint(b));
        let inherited = if e.is_boundary() && t.label(e.v[0]) == t.label(e.v[1]) {
            t.label(e.v[0])
        } else {
            BoundaryLabel::Interior
        };
        labels.push(inherited);
    }
    let mut tris = Vec::with_capacity(4 * t.num_triangles());
    for (k, tri) in t.triangles().iter().enumerate() {
        let [eab, ebc, eca] = t.triangle_edges(k).map(|e| nv + e);
        let [a, b, c] = *tri;
        tris.push([a, eab, eca]);
        tris.push([eab, b, ebc]);
        tris.push([eca, ebc, c]);
        tris.push([eab, ebc, eca]);
    }
    from_labeled_parts(verts, tris, labels, t.domain().cloned())
}
