//! Hardy-Littlewood and sharp maximal functions with their witnesses and
//! cutoff certificates.

use cztree::maximal::{hl_maximal, infimal_sharp, sharp_field, sharp_maximal};
use cztree::scalar::frac;
use cztree::{Exponent, FinFunc, Tree, Vertex, Window};

fn main() -> cztree::Result<()> {
    let tree = Tree::new(2)?;
    let x = tree.parse_vertex("0:1")?;
    let chi = FinFunc::indicator(x.clone());

    let m = hl_maximal(&tree, &chi, &Vertex::origin())?;
    println!("M chi(o) = {} via {}", m.value, m.witness);
    println!("  stopped at level {} ({})", m.certificate.stop_level, m.certificate.rule);

    for q in [Exponent::one(), Exponent::two(), Exponent::Finite(frac(3, 2))] {
        let s = sharp_maximal(&tree, &chi, &q, &x)?;
        let i = infimal_sharp(&tree, &chi, &q, &x)?;
        println!("q = {q}: sharp = {}, infimal = {}, witness {}", s.value, i.value, s.witness);
    }

    let f = FinFunc::from_pairs([(x, frac(1, 2)), (tree.parse_vertex("0:01")?, frac(-3, 2))])?;
    let window = Window::new(Vertex::geodesic(1), 3);
    println!("sharp field of f on {window}:");
    for (v, r) in sharp_field(&tree, &f, &Exponent::one(), &window)? {
        println!("  {:>8}  {}", v.to_string(), r.value);
    }
    Ok(())
}
