"""Help formatting and verbosity flags of the ``simulate`` command"""

import logging
import re
from argparse import Action, ArgumentParser, HelpFormatter, Namespace
from textwrap import fill
from typing import Any, List, Optional, Sequence, Union

# bullet and opening backtick of a command list entry
BULLET_RE = re.compile(r"[\s\-`]*")


class CommandListFormatter(HelpFormatter):
    """Wrap a multi-line description one line at a time

    Continuation lines of a ``- `command`: help`` entry line up with the command name.

    """

    def _fill_text(self, text: str, width: int, indent: str) -> str:
        if "\n" not in text:
            return super()._fill_text(text, width, indent)
        wrapped = []
        for line in text.split("\n"):
            hang = indent + BULLET_RE.match(line).end() * " "
            wrapped.append(
                fill(line, width, initial_indent=indent, subsequent_indent=hang)
            )
        return "\n".join(wrapped)


class VerbosityAction(Action):  # pylint: disable=too-few-public-methods
    """Move the log level by ``const`` each time the flag is given

    The level stays between ``DEBUG`` and ``CRITICAL``.

    """

    def __init__(  # pylint: disable=too-many-arguments
        self,
        option_strings: List[str],
        dest: str,
        const: int,
        default: int = logging.WARNING,
        help: Optional[str] = None,  # pylint: disable=redefined-builtin
    ):
        super().__init__(
            option_strings, dest, nargs=0, const=const, default=default, help=help
        )

    def __call__(
        self,
        parser: ArgumentParser,
        namespace: Namespace,
        values: Union[str, Sequence[Any], None],
        option_string: Optional[str] = None,
    ) -> None:
        level = getattr(namespace, self.dest, self.default) + self.const
        setattr(namespace, self.dest, min(max(level, logging.DEBUG), logging.CRITICAL))
