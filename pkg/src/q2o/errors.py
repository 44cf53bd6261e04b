"""Exception hierarchy.

Errors fall into three families that the CLI maps onto exit codes:
input problems (2), solver problems (3) and database problems.
"""


class Q2OError(Exception):
    pass


class InputError(Q2OError):
    exit_code = 2


class SolverError(Q2OError):
    exit_code = 3


class DatabaseError(Q2OError):
    exit_code = 3


# -- instance files and domain objects
class MalformedInput(InputError):
    pass


class DuplicateAlias(InputError):
    pass


class UnknownAlias(InputError):
    pass


class BadSelectivity(InputError):
    pass


class EmptyGraph(InputError):
    pass


class EmptySubset(InputError):
    pass


class NotAPermutation(InputError):
    pass


class LengthMismatch(InputError):
    pass


class TooSmall(InputError):
    pass


# -- hints
class TooFewRelations(InputError):
    pass


class MalformedHint(InputError):
    pass


class EmptySql(InputError):
    pass


# -- reporting
class MalformedCsv(InputError):
    pass


class ZeroComponent(InputError):
    pass


class EmptyInput(InputError):
    pass


# -- solvers
class ConfigError(SolverError):
    pass


class TooLarge(SolverError):
    pass


class EndpointUnavailable(SolverError):
    pass


class ReplayMissing(SolverError):
    pass


# -- database
class PgConnectionError(DatabaseError):
    pass


class NoSuchTable(DatabaseError):
    pass


class SqlError(DatabaseError):
    pass


class QueryTimeout(DatabaseError):
    pass


class ExplainParseError(DatabaseError):
    pass
