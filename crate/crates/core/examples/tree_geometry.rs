//! Vertex coordinates, distances, levels and ball measures.

use cztree::{Tree, Vertex};

fn main() -> cztree::Result<()> {
    let tree = Tree::new(2)?;
    let x = tree.parse_vertex("0:1101")?;
    let y = tree.parse_vertex("-1:")?;
    println!("x = {x}, level {}, weight {}", x.level(), tree.weight(&x));
    println!("y = {y}, level {}, weight {}", y.level(), tree.weight(&y));
    println!("d(x, y) = {}, join {}", x.distance(&y), x.join(&y));
    println!("father of x: {}, x lies below o: {}", x.father(), x.lies_below(&Vertex::origin()));

    // "1:0" names the same vertex as "0:" and is canonicalized on ingest
    println!("1:0 parses to {}", tree.parse_vertex("1:0")?);

    for r in 0..=5 {
        let enumerated = tree.ball_measure(&x, r);
        let closed = tree.ball_measure_closed(&x, r);
        println!("ball(x, {r}): {} vertices, mass {enumerated} (closed form {closed})", tree.ball(&x, r).len());
    }
    Ok(())
}
