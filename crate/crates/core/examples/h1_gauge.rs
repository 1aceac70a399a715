//! Two-sided estimate of the atomic norm: exact LP gauge over a finite
//! family above, BMO duality below.

use cztree::hardy::h1_estimate;
use cztree::scalar::frac;
use cztree::sets::cz_sets_in_window;
use cztree::{CzSet, FinFunc, Tree, Vertex, Window};

fn main() -> cztree::Result<()> {
    let tree = Tree::new(2)?;
    let x = tree.parse_vertex("0:1")?;
    let atom = FinFunc::from_pairs([(x.clone(), frac(1, 3)), (Vertex::geodesic(-1), frac(-1, 3))])?;
    let set = CzSet::new(Vertex::origin(), 1)?;
    let candidates = vec![FinFunc::indicator(x), atom.clone()];

    let single = h1_estimate(&tree, &atom, &[set], "single", &candidates)?;
    println!("atom: {} <= ||a||_H1 <= {}", single.lower.value, single.upper.value);

    let window = Window::new(Vertex::origin(), 4);
    let family = cz_sets_in_window(&tree, &window, false, false);
    let g = atom.scale(&frac(2, 1)).sub(&FinFunc::from_pairs([
        (tree.parse_vertex("0:10")?, frac(1, 4)),
        (tree.parse_vertex("0:01")?, frac(-1, 4)),
    ])?);
    let est = h1_estimate(&tree, &g, &family, "window", &candidates)?;
    println!(
        "g over {} sets: {} <= ||g||_H1 <= {} (gap {:?})",
        family.len(),
        est.lower.value,
        est.upper.value,
        est.gap().map(|r| r.to_string())
    );
    for (s, _, t) in &est.upper.pieces {
        println!("  {t} on {s}");
    }
    Ok(())
}
