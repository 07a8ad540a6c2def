//! Four-connected component labelling on the node lattice.

use crate::grid::ScalarField;

/// Labels nodes with `field >= threshold` by 4-connected component.
/// Returns one label per node (`0` for background) and the component count.
pub fn label_components(field: &ScalarField, threshold: f64) -> (Vec<u32>, usize) {
    let g = field.grid();
    let n = g.n();
    let mut labels = vec![0u32; g.node_count()];
    let mut count = 0u32;
    let mut stack = Vec::new();
    for start in 0..g.node_count() {
        if labels[start] != 0 || field.values()[start] < threshold {
            continue;
        }
        count += 1;
        labels[start] = count;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = g.coords(k);
            let neighbours = [
                (i > 0).then(|| k - 1),
                (i + 1 < n).then(|| k + 1),
                (j > 0).then(|| k - n),
                (j + 1 < n).then(|| k + n),
            ];
            for m in neighbours.into_iter().flatten() {
                if labels[m] == 0 && field.values()[m] >= threshold {
                    labels[m] = count;
                    stack.push(m);
                }
            }
        }
    }
    (labels, count as usize)
}

pub fn count_components(field: &ScalarField, threshold: f64) -> usize {
    label_components(field, threshold).1
}
