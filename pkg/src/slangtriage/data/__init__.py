"""Bundled demo data: example lexicons and the default substitution map."""
