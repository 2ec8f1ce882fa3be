"""Package for gnuplot script templates."""
