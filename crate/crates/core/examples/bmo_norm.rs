//! BMO norms, the atom pairing bound and the sandwich BMO_1 <= BMO_2.

use cztree::bmo::{atom_pairing_bound_check, bmo_norm};
use cztree::scalar::frac;
use cztree::{CzSet, Exponent, FinFunc, Tree, Vertex};

fn main() -> cztree::Result<()> {
    let tree = Tree::new(2)?;
    let x = tree.parse_vertex("0:1")?;
    let chi = FinFunc::indicator(x.clone());
    let b1 = bmo_norm(&tree, &chi, &Exponent::one())?;
    let b2 = bmo_norm(&tree, &chi, &Exponent::two())?;
    println!("||chi||_BMO1 = {} (witness {}, {} sets examined)", b1.value, b1.witness, b1.sets_examined);
    println!("||chi||_BMO2 = {} = {:.6}", b2.value, b2.value.to_f64());

    let set = CzSet::new(Vertex::origin(), 1)?;
    let atom = FinFunc::from_pairs([(x, frac(1, 3)), (Vertex::geodesic(-1), frac(-1, 3))])?;
    let check = atom_pairing_bound_check(&tree, &chi, &atom, &set)?;
    println!(
        "<chi, a> = {}, bound {}, holds: {}, slack {}",
        check.pairing, check.bmo1, check.holds, check.slack
    );
    Ok(())
}
