//! Smoothness constant of a kernel supported in a window.

use cztree::bmo::{hormander_constant, KernelWindow};
use cztree::scalar::{frac, int};
use cztree::sets::cz_sets_in_window;
use cztree::{Tree, Vertex, Window};

fn main() -> cztree::Result<()> {
    let tree = Tree::new(2)?;
    let window = Window::new(Vertex::geodesic(2), 6);
    // K(y, x) = 2^(-d(x, y)), decaying with distance
    let kernel = KernelWindow::from_fn(&tree, window.clone(), |y, x| {
        let d = y.distance(x) as i64;
        if d <= 4 { frac(1, 1 << d) } else { int(0) }
    });
    let family = cz_sets_in_window(&tree, &window, true, false);
    let report = hormander_constant(&tree, &kernel, &family)?;
    println!("{} kernel entries, {} sets", kernel.entries.len(), family.len());
    println!("constant = {} ({:.6})", report.value, report.value.to_f64());
    if let Some((s, y, z)) = &report.witness {
        println!("attained on {s} between {y} and {z}");
    }
    Ok(())
}
