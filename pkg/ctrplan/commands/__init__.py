# CLI subcommand groups
