//! Admissible trapezoids, their CZ envelopes, enlargements and the nested
//! covering family.

use cztree::sets::{covering_family, covering_index};
use cztree::{AdmissibleTrapezoid, CzSet, Tree, Vertex};

fn main() -> cztree::Result<()> {
    let tree = Tree::new(2)?;
    let o = Vertex::origin();
    println!("{:>3} {:>8} {:>10} {:>8} {:>12}", "h", "mu(R)", "mu(env)", "ratio", "mu(enlarged)");
    for h in [1, 2, 3, 5, 8, 16] {
        let r = AdmissibleTrapezoid::new(o.clone(), h)?;
        let env = r.envelope();
        let ratio = env.measure(&tree) / r.measure(&tree);
        println!(
            "{h:>3} {:>8} {:>10} {:>8} {:>12}",
            r.measure(&tree).to_string(),
            env.measure(&tree).to_string(),
            ratio.to_string(),
            env.enlargement_measure(&tree).to_string()
        );
    }

    let set = CzSet::parse(&tree, "cz root=0: h=8")?;
    let band = set.band();
    let big = set.enlargement();
    println!("{set}: depths {}..={}, enlargement depths {}..={}", band.lo, band.hi, big.lo, big.hi);
    println!("as JSON: {}", set.to_json(&tree));

    for s in ["0:", "0:1", "-2:", "3:0110"] {
        let v = tree.parse_vertex(s)?;
        let j = covering_index(&v);
        println!("{v} first lies in covering set {j}: {}", covering_family(j));
    }
    Ok(())
}
