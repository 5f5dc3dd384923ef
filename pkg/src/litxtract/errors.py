"""Exception types shared across the package."""


class LitxtractError(Exception):
    """Base class for all litxtract errors."""


# --- tabular ingest ---------------------------------------------------------

class EmptyFileError(LitxtractError):
    pass


class NoColumnsError(LitxtractError):
    pass


class CsvSyntaxError(LitxtractError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class WorkbookFormatError(LitxtractError):
    pass


# --- extraction schema ------------------------------------------------------

class EmptySchemaError(LitxtractError):
    pass


class UnknownPresetError(LitxtractError):
    pass


class UnknownPlaceholderError(LitxtractError):
    def __init__(self, name: str):
        super().__init__(f"template references unknown column: {name!r}")
        self.name = name


class TemplateSyntaxError(LitxtractError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"byte offset {offset}: {message}")
        self.offset = offset


# --- provider client --------------------------------------------------------

class ProviderError(LitxtractError):
    def __init__(self, status: int, body_excerpt: str):
        super().__init__(f"provider returned HTTP {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class TransportError(LitxtractError):
    pass


class MalformedResponseError(LitxtractError):
    pass


class NoCredentialError(LitxtractError):
    pass


# --- output parsing ---------------------------------------------------------

class NoJsonFoundError(LitxtractError):
    pass


class RequiredFieldMissingError(LitxtractError):
    def __init__(self, name: str):
        super().__init__(f"required field missing from response: {name!r}")
        self.name = name


class TypeMismatchError(LitxtractError):
    def __init__(self, name: str, detail: str = ""):
        msg = f"cannot coerce value for field {name!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.name = name


# --- batch engine / export --------------------------------------------------

class StaleCheckpointError(LitxtractError):
    pass


class NothingToExportError(LitxtractError):
    pass
