"""CLI entry point."""

from __future__ import annotations

from dotenv import load_dotenv

from cli.loader import RootCommand
from cli.utils.metadata import Metadata


def main() -> None:
    """Run the ``wkbpole`` command line."""
    #
    # Application context handed to commands through ctx.obj.
    #
    app_context = {
        "PACKAGE_ROOT_DIR": Metadata.PACKAGE_ROOT_DIR,
        "COMMANDS_DIR": Metadata.COMMANDS_DIR,
        "PACKAGE_NAME": Metadata.PACKAGE_NAME,
        "APP_NAME": Metadata.APP_NAME,
        "COMMAND_NAME": Metadata.COMMAND_NAME,
        "VERSION": Metadata.VERSION,
    }

    #
    # WKBPOLE_* settings may come from a .env file.
    #
    load_dotenv()

    cli = RootCommand(Metadata.COMMANDS_DIR, app_context=app_context)
    cli(prog_name=Metadata.COMMAND_NAME)


if __name__ == "__main__":
    main()
