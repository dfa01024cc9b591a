//! The line-oriented topology text format round-trips losslessly, including
//! roles, coordinates, brickwork colors, and partition labels.

use ghznet::topology::Topology;

fn main() -> ghznet::Result<()> {
    let grid = Topology::square_grid(3, 3, (0, 1), (2, 1))?;
    let colored = grid.brickwork_colored()?;
    let text = colored.to_text();
    println!("3x3 brickwork-colored grid as text:\n");
    print!("{text}");

    let parsed = Topology::from_text(&text)?;
    println!("\nround-trip identical: {}", parsed.to_text() == text);
    println!(
        "nodes {}, edges {}, consumer separation {}",
        parsed.node_count(),
        parsed.edge_count(),
        parsed.consumer_distance()?
    );
    Ok(())
}
