//! Good/bad splitting at a height 2^j and the telescoping atomic
//! decomposition built from it.

use cztree::hardy::{good_bad_split, telescoping_h1_upper, SplitLimits};
use cztree::scalar::frac;
use cztree::{Exponent, FinFunc, Tree};

fn main() -> cztree::Result<()> {
    let tree = Tree::new(2)?;
    let g = FinFunc::from_pairs([
        (tree.parse_vertex("0:1")?, frac(3, 1)),
        (tree.parse_vertex("0:10")?, frac(-2, 1)),
        (tree.parse_vertex("0:11")?, frac(-4, 1)),
    ])?;
    println!("g = {}", g.to_json_value());
    println!("integral of g = {}", g.integral(&tree));

    let q = Exponent::two();
    for j in [2, 1, 0] {
        let s = good_bad_split(&tree, &g, &q, j, SplitLimits::default())?;
        println!(
            "j = {j}: |Omega| = {}, {} bad parts, c_good = {}, c_bad = {:.4}, violations {:?}",
            s.omega.len(),
            s.bad_parts.len(),
            s.c_good,
            s.c_bad(),
            s.violations(&tree, &g)
        );
    }

    let (total, d) = telescoping_h1_upper(&tree, &g, &q, SplitLimits::default())?;
    println!("telescoping bound {total} from {} atoms, levels {}..{}", d.pieces.len(), d.j_bottom, d.j_top);
    for p in &d.pieces {
        println!("  level {:?}: {} x atom on {}", p.j, p.coefficient, p.atom.set);
    }
    d.revalidate(&tree, &g)?;
    Ok(())
}
