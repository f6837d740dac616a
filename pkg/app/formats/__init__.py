"""JSON file formats and their conversion to domain objects."""
