"""Forward-pass reference: array ops, blocks, attention, decoder, losses."""
